#include "tdesign/certify.hpp"

#include <cmath>
#include <limits>

#include "tdesign/error.hpp"

namespace tdesign {

DesignReport certify_design(const Variety& variety, int t, const PointConfig& X, const QuadratureRule& rule,
                            const CertifyOptions& options) {
  if (t < 0) throw InputError("degree must be non-negative");
  if (X.size() < 1) throw InputError("certification needs at least one point");
  if (X.ambient_dim() != variety.ambient_dim()) throw InputError("points have the wrong dimension");
  DesignReport r;
  r.variety = variety.name();
  r.t = t;
  r.N = static_cast<int>(X.size());
  r.exact_reference = variety.has_exact_moments();
  r.quadrature_kind = r.exact_reference ? QuadratureKind::exact_moments : rule.kind();
  r.worst_alpha.assign(static_cast<std::size_t>(variety.ambient_dim()), 0);
  r.tolerance = r.exact_reference ? options.tol : options.mc_floor;

  const Eigen::Index N = X.size();
  const Eigen::Index Q = static_cast<Eigen::Index>(rule.size());
  bool all_ok = true;
  Eigen::VectorXd vals(N), ref_vals(r.exact_reference ? 0 : Q);
  for (const Exponent& alpha : monomials_up_to(variety.ambient_dim(), t)) {
    for (Eigen::Index i = 0; i < N; ++i) vals[i] = monomial_value(alpha, X.coords.col(i));
    const double avg = pairwise_sum(vals) / static_cast<double>(N);
    double ref = 0.0, se = 0.0, tol = options.tol;
    if (r.exact_reference) {
      ref = variety.exact_moment(alpha);
    } else {
      for (Eigen::Index i = 0; i < Q; ++i) ref_vals[i] = monomial_value(alpha, rule.nodes.coords.col(i));
      ref = integrate(rule, ref_vals);
      se = standard_error(rule, ref_vals);
      tol = options.se_factor * se + options.mc_floor;
    }
    const double err = std::abs(avg - ref);
    if (err > tol) all_ok = false;
    if (err > r.worst_monomial_error) {
      r.worst_monomial_error = err;
      r.worst_alpha = alpha;
      r.worst_standard_error = se;
      r.tolerance = tol;
    }
  }
  r.is_design_at_tol = all_ok;
  r.lower_bound = options.known_lower_bound ? *options.known_lower_bound : lower_bound(variety, t, options.seed);
  r.meets_lower_bound = r.N >= r.lower_bound;
  try {
    r.newton_energy = newton_energy(X, variety.intrinsic_dim());
  } catch (const NumericalError&) {
    r.notes.push_back("coincident points: Newtonian energy is infinite");
  }
  return r;
}

int lower_bound(const Variety& variety, int t, std::uint64_t seed) {
  if (t < 0) throw InputError("degree must be non-negative");
  const int s = t / 2;
  if (s == 0) return 1;
  if (variety.kind() == VarietyKind::sphere) return static_cast<int>(sphere_space_dim(variety.intrinsic_dim(), s));
  return build_default_basis(variety, s, seed).dim();
}

TightReport tight_check(const OrthoBasis& basis_half, int t, const PointConfig& X, double rel_tol) {
  if (t % 2 != 0) throw InputError("tightness is only checked for even t");
  if (basis_half.degree() != t / 2) throw InputError("tight check needs the degree t/2 basis");
  TightReport r;
  const Eigen::Index N = X.size();
  r.dimension_match = N == basis_half.dim();
  double dev = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const double k = full_kernel_eval(basis_half, X.coords.col(i), X.coords.col(j));
      if (i == j) r.diagonal.push_back(k);
      dev = std::max(dev, std::abs(k - (i == j ? static_cast<double>(N) : 0.0)));
    }
  }
  r.max_relative_deviation = dev / static_cast<double>(N);
  r.tight = r.dimension_match && r.max_relative_deviation <= rel_tol;
  return r;
}

double newton_energy(const PointConfig& X, int d) {
  const Eigen::Index N = X.size();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(N * (N - 1) / 2));
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = i + 1; j < N; ++j) {
      const double r = (X.coords.col(i) - X.coords.col(j)).norm();
      if (r == 0.0) throw NumericalError("coincident points give infinite energy");
      terms.push_back(d == 1 ? -std::log(r) : std::pow(r, -(d - 1)));
    }
  }
  return pairwise_sum(terms);
}

}  // namespace tdesign
