#include "tdesign/quadrature.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "tdesign/error.hpp"

namespace tdesign {

namespace {

constexpr std::size_t kGrassmannMonteCarloNodes = 1'000'000;
constexpr std::size_t kCustomMonteCarloNodes = 20'000;
constexpr std::size_t kMaxProductNodes = 4'000'000;

std::size_t sphere_rule_size(int d, int degree) {
  std::size_t count = static_cast<std::size_t>(degree + 1);
  for (int level = 2; level <= d; ++level) count *= static_cast<std::size_t>(degree / 2 + 1);
  return count;
}

// Product rule on S^d; the last coordinate is the Gegenbauer variable.
void sphere_rule(int d, int degree, Eigen::MatrixXd& nodes, Eigen::VectorXd& weights) {
  if (d == 1) {
    const int m = degree + 1;
    nodes.resize(2, m);
    weights = Eigen::VectorXd::Constant(m, 1.0 / m);
    for (int j = 0; j < m; ++j) {
      const double th = 2.0 * std::numbers::pi * j / m;
      nodes(0, j) = std::cos(th);
      nodes(1, j) = std::sin(th);
    }
    return;
  }
  Eigen::MatrixXd sub;
  Eigen::VectorXd sub_w;
  sphere_rule(d - 1, degree, sub, sub_w);
  Eigen::VectorXd z, zw;
  gauss_gegenbauer(degree / 2 + 1, 0.5 * (d - 2), z, zw);
  const Eigen::Index ns = sub.cols();
  nodes.resize(d + 1, ns * z.size());
  weights.resize(ns * z.size());
  for (Eigen::Index a = 0; a < z.size(); ++a) {
    const double s = std::sqrt(std::max(0.0, 1.0 - z[a] * z[a]));
    for (Eigen::Index b = 0; b < ns; ++b) {
      const Eigen::Index c = a * ns + b;
      nodes.col(c).head(d) = s * sub.col(b);
      nodes(d, c) = z[a];
      weights[c] = zw[a] * sub_w[b];
    }
  }
}

void torus_rule(double R, double r, int degree, Eigen::MatrixXd& nodes, Eigen::VectorXd& weights) {
  const int nu = degree + 1;
  const int nv = degree + 2;
  nodes.resize(3, nu * nv);
  weights.resize(nu * nv);
  for (int j = 0; j < nv; ++j) {
    const double v = 2.0 * std::numbers::pi * j / nv;
    const double jac = (R + r * std::cos(v)) / (R * nu * nv);
    for (int i = 0; i < nu; ++i) {
      const double u = 2.0 * std::numbers::pi * i / nu;
      const int c = j * nu + i;
      nodes(0, c) = (R + r * std::cos(v)) * std::cos(u);
      nodes(1, c) = (R + r * std::cos(v)) * std::sin(u);
      nodes(2, c) = r * std::sin(v);
      weights[c] = jac;
    }
  }
  weights /= weights.sum();
}

std::size_t orbit_size(const Variety& v, bool symmetrize) {
  return symmetrize && !v.symmetries().empty() ? v.symmetries().size() : 1;
}

}  // namespace

std::string to_string(QuadratureKind kind) {
  switch (kind) {
    case QuadratureKind::monte_carlo:
      return "monte_carlo";
    case QuadratureKind::exact_moments:
      return "exact_moments";
    case QuadratureKind::parametric:
      return "parametric";
  }
  return "unknown";
}

QuadratureKind quadrature_kind_from_string(const std::string& s) {
  if (s == "monte_carlo") return QuadratureKind::monte_carlo;
  if (s == "exact_moments") return QuadratureKind::exact_moments;
  if (s == "parametric") return QuadratureKind::parametric;
  throw InputError("unknown quadrature kind '" + s + "'");
}

void gauss_gegenbauer(int count, double a, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (count < 1) throw InputError("gauss rule needs at least one node");
  // Golub-Welsch on the symmetric Jacobi matrix of the monic recurrence.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(count, count);
  for (int k = 1; k < count; ++k) {
    const double b = k * (k + 2.0 * a) / ((2.0 * k + 2.0 * a + 1.0) * (2.0 * k + 2.0 * a - 1.0));
    J(k, k - 1) = J(k - 1, k) = std::sqrt(b);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights = es.eigenvectors().row(0).transpose().cwiseAbs2();
  weights /= weights.sum();
}

QuadratureDescriptor monte_carlo_descriptor(const Variety& variety, std::size_t total_nodes,
                                            std::uint64_t seed, bool symmetrize) {
  QuadratureDescriptor d;
  d.kind = QuadratureKind::monte_carlo;
  d.seed = seed;
  d.symmetrized = symmetrize && !variety.symmetries().empty();
  const std::size_t orbit = orbit_size(variety, symmetrize);
  d.samples = std::max<std::size_t>(2, (total_nodes + orbit - 1) / orbit);
  return d;
}

QuadratureDescriptor default_quadrature(const Variety& variety, int t, std::uint64_t seed,
                                        std::size_t min_nodes) {
  if (t < 0) throw InputError("degree must be non-negative");
  min_nodes = std::max<std::size_t>(min_nodes, 4 * binomial(variety.ambient_dim() + t, t));
  QuadratureDescriptor d;
  d.seed = seed;
  d.degree = 2 * t;
  if (variety.kind() == VarietyKind::sphere &&
      sphere_rule_size(variety.intrinsic_dim(), d.degree) <= kMaxProductNodes) {
    d.kind = QuadratureKind::exact_moments;
    while (sphere_rule_size(variety.intrinsic_dim(), d.degree) < min_nodes) ++d.degree;
    return d;
  }
  if (variety.kind() == VarietyKind::torus) {
    d.kind = QuadratureKind::parametric;
    while (static_cast<std::size_t>((d.degree + 1) * (d.degree + 2)) < min_nodes) ++d.degree;
    return d;
  }
  const std::size_t budget =
      variety.kind() == VarietyKind::grassmannian ? kGrassmannMonteCarloNodes : kCustomMonteCarloNodes;
  d = monte_carlo_descriptor(variety, std::max(budget, min_nodes), seed, true);
  return d;
}

QuadratureRule make_quadrature(const Variety& variety, const QuadratureDescriptor& descriptor) {
  QuadratureRule rule;
  rule.descriptor = descriptor;
  switch (descriptor.kind) {
    case QuadratureKind::exact_moments: {
      if (variety.kind() != VarietyKind::sphere) {
        throw InputError("exact-moment product rule is only available on spheres");
      }
      sphere_rule(variety.intrinsic_dim(), descriptor.degree, rule.nodes.coords, rule.weights);
      break;
    }
    case QuadratureKind::parametric: {
      if (variety.kind() != VarietyKind::torus) {
        throw InputError("parametric rule is only available on tori");
      }
      torus_rule(variety.params()[0], variety.params()[1], descriptor.degree, rule.nodes.coords,
                 rule.weights);
      break;
    }
    case QuadratureKind::monte_carlo: {
      if (descriptor.samples < 1) throw InputError("Monte Carlo rule needs samples");
      const PointConfig base = sample_measure(variety, descriptor.samples, descriptor.seed);
      const auto& syms = variety.symmetries();
      const bool sym = descriptor.symmetrized && !syms.empty();
      const std::size_t orbit = sym ? syms.size() : 1;
      const Eigen::Index total = base.size() * static_cast<Eigen::Index>(orbit);
      rule.group_size = orbit;
      if (!sym) {
        rule.nodes = base;
      } else {
        rule.nodes = PointConfig(variety.ambient_dim(), total);
        for (Eigen::Index i = 0; i < base.size(); ++i) {
          for (std::size_t g = 0; g < orbit; ++g) {
            rule.nodes.coords.col(i * static_cast<Eigen::Index>(orbit) + static_cast<Eigen::Index>(g)) =
                syms[g] * base.coords.col(i);
          }
        }
      }
      rule.weights = Eigen::VectorXd::Constant(total, 1.0 / static_cast<double>(total));
      break;
    }
  }
  return rule;
}

double integrate(const QuadratureRule& rule, const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() != rule.weights.size()) throw InputError("value count does not match rule");
  const Eigen::VectorXd prod = rule.weights.cwiseProduct(values);
  return pairwise_sum(prod);
}

double standard_error(const QuadratureRule& rule, const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (rule.kind() != QuadratureKind::monte_carlo) return 0.0;
  const std::size_t g = rule.group_size;
  const std::size_t groups = rule.size() / g;
  if (groups < 2) return 0.0;
  Eigen::VectorXd means(static_cast<Eigen::Index>(groups));
  for (std::size_t k = 0; k < groups; ++k) {
    means[static_cast<Eigen::Index>(k)] =
        values.segment(static_cast<Eigen::Index>(k * g), static_cast<Eigen::Index>(g)).mean();
  }
  const double mu = pairwise_sum(means) / static_cast<double>(groups);
  const Eigen::VectorXd dev = (means.array() - mu).square().matrix();
  const double var = pairwise_sum(dev) / static_cast<double>(groups - 1);
  return std::sqrt(var / static_cast<double>(groups));
}

double integrate_monomial(const Variety& variety, const Exponent& alpha, const QuadratureRule& rule) {
  if (static_cast<int>(alpha.size()) != variety.ambient_dim()) {
    throw InputError("exponent length does not match the ambient dimension");
  }
  if (rule.kind() == QuadratureKind::exact_moments && variety.has_exact_moments()) {
    return variety.exact_moment(alpha);
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(rule.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = monomial_value(alpha, rule.nodes.coords.col(i));
  return integrate(rule, v);
}

}  // namespace tdesign
