#include "tdesign/variety.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "tdesign/error.hpp"

namespace tdesign {

std::string to_string(VarietyKind kind) {
  switch (kind) {
    case VarietyKind::sphere: return "sphere";
    case VarietyKind::torus: return "torus";
    case VarietyKind::grassmannian: return "grassmannian";
    case VarietyKind::custom: return "custom";
  }
  return "custom";
}

Variety::Variety(Definition def) : def_(std::move(def)) {
  const int n = def_.ambient_dim;
  const int d = def_.intrinsic_dim;
  if (n < 1 || d < 0 || d >= n) {
    throw InputError("variety '" + def_.name + "' needs 0 <= intrinsic_dim < ambient_dim");
  }
  if (static_cast<int>(def_.defining.size()) < n - d) {
    throw InputError("variety '" + def_.name + "' needs at least n - d defining polynomials");
  }
  gradient_.reserve(def_.defining.size());
  for (const auto& p : def_.defining) {
    if (p.ambient_dim() != n) {
      throw InputError("defining polynomial of '" + def_.name + "' has wrong ambient dimension");
    }
    max_degree_ = std::max(max_degree_, p.degree());
    std::vector<MultiPoly> g;
    g.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) g.push_back(p.derivative(k));
    gradient_.push_back(std::move(g));
  }
}

double Variety::exact_moment(const Exponent& alpha) const {
  if (!def_.exact_moment) throw InputError("variety '" + name() + "' has no closed-form moments");
  if (static_cast<int>(alpha.size()) != ambient_dim()) {
    throw InputError("moment exponent has wrong length");
  }
  return def_.exact_moment(alpha);
}

Variety Variety::with_tolerances(const VarietyTolerances& tol) const {
  Definition def = def_;
  def.tolerances = tol;
  return Variety(std::move(def));
}

Eigen::VectorXd Variety::residuals(const Eigen::VectorXd& x) const {
  if (x.size() != ambient_dim()) {
    throw InputError("point has dimension " + std::to_string(x.size()) + ", variety '" + name() +
                     "' expects " + std::to_string(ambient_dim()));
  }
  Eigen::VectorXd r(equation_count());
  for (int i = 0; i < equation_count(); ++i) r[i] = def_.defining[static_cast<std::size_t>(i)].evaluate(x);
  return r;
}

Eigen::MatrixXd Variety::jacobian(const Eigen::VectorXd& x) const {
  if (x.size() != ambient_dim()) throw InputError("point dimension mismatch in jacobian");
  Eigen::MatrixXd J(equation_count(), ambient_dim());
  for (int i = 0; i < equation_count(); ++i) {
    for (int k = 0; k < ambient_dim(); ++k) {
      J(i, k) = gradient_[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].evaluate(x);
    }
  }
  return J;
}

double Variety::residual_norm(const Eigen::VectorXd& x) const {
  return residuals(x).cwiseAbs().maxCoeff();
}

double Variety::tolerance_at(const Eigen::VectorXd& x) const {
  return def_.tolerances.residual * (1.0 + std::pow(x.norm(), max_degree_));
}

Eigen::VectorXd eval_defining(const Variety& variety, const Eigen::VectorXd& x) {
  return variety.residuals(x);
}

std::vector<Eigen::VectorXd> determinant_normal_vectors(const Eigen::MatrixXd& jacobian,
                                                        const std::vector<int>& index_set) {
  const int k = static_cast<int>(index_set.size());
  const Eigen::Index n = jacobian.cols();
  Eigen::MatrixXd g(n, k);
  for (int c = 0; c < k; ++c) g.col(c) = jacobian.row(index_set[static_cast<std::size_t>(c)]).transpose();
  const Eigen::MatrixXd gram = g.transpose() * g;

  std::vector<Eigen::VectorXd> u;
  u.reserve(static_cast<std::size_t>(k));
  for (int i = 1; i <= k; ++i) {
    // Expand the i x i determinant along its last (vector-valued) row. The
    // first i-1 rows hold <g_c, g_row> for c = 1..i.
    Eigen::VectorXd ui = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < i; ++c) {
      double minor = 1.0;
      if (i > 1) {
        Eigen::MatrixXd m(i - 1, i - 1);
        for (int row = 0; row < i - 1; ++row) {
          int col_out = 0;
          for (int col = 0; col < i; ++col) {
            if (col == c) continue;
            m(row, col_out++) = gram(col, row);
          }
        }
        minor = m.determinant();
      }
      const double sign = ((i - 1 + c) % 2 == 0) ? 1.0 : -1.0;
      ui += sign * minor * g.col(c);
    }
    u.push_back(std::move(ui));
  }
  return u;
}

NormalBasis normal_basis(const Variety& variety, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd J = variety.jacobian(x);
  const int k = variety.codim();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J.transpose());
  const auto& perm = qr.colsPermutation().indices();
  std::vector<int> index_set(perm.data(), perm.data() + k);
  std::sort(index_set.begin(), index_set.end());

  Eigen::MatrixXd sub(k, J.cols());
  for (int c = 0; c < k; ++c) sub.row(c) = J.row(index_set[static_cast<std::size_t>(c)]);
  const Eigen::VectorXd sv_sub = Eigen::JacobiSVD<Eigen::MatrixXd>(sub).singularValues();
  const double sigma_max = Eigen::JacobiSVD<Eigen::MatrixXd>(J).singularValues()[0];
  const double sigma_min = sv_sub[k - 1];
  if (!(sigma_min >= variety.tolerances().rank * std::max(1.0, sigma_max))) {
    throw SingularPointError("normal rank deficient at a point of '" + variety.name() +
                             "' (smallest singular value " + std::to_string(sigma_min) + ")");
  }

  NormalBasis nb;
  nb.vectors = determinant_normal_vectors(J, index_set);
  nb.index_set = std::move(index_set);
  nb.min_singular_value = sigma_min;
  return nb;
}

double normal_volume_sup(const Variety& variety, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd J = variety.jacobian(x);
  const int r = variety.equation_count();
  const int k = variety.codim();
  std::vector<bool> mask(static_cast<std::size_t>(r), false);
  std::fill(mask.begin(), mask.begin() + k, true);
  double best = 0.0;
  do {
    std::vector<int> subset;
    for (int i = 0; i < r; ++i) {
      if (mask[static_cast<std::size_t>(i)]) subset.push_back(i);
    }
    double prod = 1.0;
    for (const auto& u : determinant_normal_vectors(J, subset)) prod *= u.squaredNorm();
    best = std::max(best, prod);
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

Eigen::VectorXd project_tangent(const NormalBasis& basis, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = v;
  for (const auto& u : basis.vectors) {
    const double uu = u.squaredNorm();
    if (uu > 0.0) out -= (v.dot(u) / uu) * u;
  }
  return out;
}

Eigen::MatrixXd tangent_projector(const Variety& variety, const Eigen::VectorXd& x) {
  const NormalBasis nb = normal_basis(variety, x);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(x.size(), x.size());
  for (const auto& u : nb.vectors) {
    const double uu = u.squaredNorm();
    if (uu > 0.0) P -= (u * u.transpose()) / uu;
  }
  return P;
}

Eigen::MatrixXd tangent_basis(const Variety& variety, const Eigen::VectorXd& x) {
  const NormalBasis nb = normal_basis(variety, x);
  const Eigen::Index n = x.size();
  const int k = variety.codim();
  Eigen::MatrixXd U(n, k);
  for (int i = 0; i < k; ++i) U.col(i) = nb.vectors[static_cast<std::size_t>(i)].normalized();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(U);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return Q.rightCols(n - k);
}

Eigen::VectorXd tangential_gradient(const Variety& variety, const MultiPoly& f,
                                    const Eigen::VectorXd& x) {
  return project_tangent(normal_basis(variety, x), f.gradient(x));
}

namespace {

// Minimum-norm Gauss-Newton on p(y) = 0; steps lie in the row space of the
// Jacobian (the normal space). Returns nullopt when it fails to converge.
std::optional<Eigen::VectorXd> gauss_newton(const Variety& variety, Eigen::VectorXd y, int& steps) {
  const int k = variety.codim();
  const int max_iter = variety.tolerances().max_iter;
  double last_step = std::numeric_limits<double>::infinity();
  int polish = 0;
  for (int iter = 0; iter <= max_iter; ++iter) {
    const Eigen::VectorXd r = variety.residuals(y);
    const double rn = r.cwiseAbs().maxCoeff();
    if (!std::isfinite(rn)) return std::nullopt;
    if (rn <= variety.tolerance_at(y)) {
      if (steps == 0 || last_step <= 1e-14 * (1.0 + y.norm()) || polish >= 2) return y;
      ++polish;
    }
    if (iter == max_iter) break;
    const Eigen::MatrixXd J = variety.jacobian(y);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s.size() < k || !(s[k - 1] > 0.0)) return std::nullopt;
    Eigen::VectorXd coeff = svd.matrixU().leftCols(k).transpose() * r;
    for (int i = 0; i < k; ++i) coeff[i] /= s[i];
    const Eigen::VectorXd delta = -svd.matrixV().leftCols(k) * coeff;
    y += delta;
    last_step = delta.norm();
    ++steps;
  }
  return std::nullopt;
}

}  // namespace

Point project_to_variety(const Variety& variety, const Eigen::VectorXd& x,
                         const ProjectionOptions& options) {
  const double r0 = variety.residual_norm(x);
  if (r0 <= variety.tolerance_at(x)) return Point{x, r0, 0};

  if (options.use_fast_path && variety.fast_projection()) {
    if (auto y = variety.fast_projection()(x)) {
      const double ry = variety.residual_norm(*y);
      if (ry <= variety.tolerance_at(*y)) return Point{*y, ry, 0};
    }
  }

  int steps = 0;
  auto y = gauss_newton(variety, x, steps);
  if (!y) {
    throw RetractionError("Gauss-Newton projection onto '" + variety.name() +
                          "' did not converge");
  }
  if (options.closest_point) {
    const double scale = 1.0 + x.norm();
    double tangential = 0.0;
    for (int outer = 0; outer < variety.tolerances().max_iter; ++outer) {
      const Eigen::VectorXd tau = tangent_projector(variety, *y) * (x - *y);
      tangential = tau.norm();
      if (tangential <= 1e-13 * scale) break;
      y = gauss_newton(variety, *y + tau, steps);
      if (!y) {
        throw RetractionError("closest-point refinement on '" + variety.name() + "' failed");
      }
    }
    if (tangential > 1e-6 * scale) {
      throw RetractionError("closest-point refinement on '" + variety.name() +
                            "' did not reach a normal foot point");
    }
  }
  return Point{*y, variety.residual_norm(*y), steps};
}

double distance(const Variety& variety, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (variety.geodesic()) return variety.geodesic()(x, y);
  return (x - y).norm();
}

PointConfig sample_measure(const Variety& variety, std::size_t count, std::uint64_t seed) {
  if (count < 1) throw InputError("sample_measure needs count >= 1");
  if (!variety.sampler()) throw InputError("variety '" + variety.name() + "' has no sampler");
  return variety.sampler()(variety, count, seed);
}

SmoothnessReport check_smoothness(const Variety& variety, int samples, std::uint64_t seed) {
  SmoothnessReport rep;
  rep.samples = samples;
  rep.min_normal_singular_value = std::numeric_limits<double>::infinity();
  rep.min_normal_volume = std::numeric_limits<double>::infinity();
  const PointConfig pts = sample_measure(variety, static_cast<std::size_t>(samples), seed);
  const int k = variety.codim();
  for (Eigen::Index i = 0; i < pts.size(); ++i) {
    const Eigen::VectorXd x = pts.point(i);
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(variety.jacobian(x)).singularValues();
    const double scale = std::max(1.0, s[0]);
    const double normal = s.size() >= k ? s[k - 1] / scale : 0.0;
    const double excess = s.size() > k ? s[k] / scale : 0.0;
    rep.min_normal_singular_value = std::min(rep.min_normal_singular_value, normal);
    rep.max_excess_singular_value = std::max(rep.max_excess_singular_value, excess);
    if (normal < variety.tolerances().rank || excess > variety.tolerances().rank) rep.smooth = false;
    if (rep.smooth) {
      const double vol = normal_volume_sup(variety, x);
      rep.min_normal_volume = std::min(rep.min_normal_volume, vol);
      rep.max_normal_volume = std::max(rep.max_normal_volume, vol);
    }
  }
  return rep;
}

}  // namespace tdesign
