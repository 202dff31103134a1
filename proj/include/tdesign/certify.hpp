#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdesign/multipoly.hpp"
#include "tdesign/numeric.hpp"
#include "tdesign/polyspace.hpp"
#include "tdesign/quadrature.hpp"
#include "tdesign/variety.hpp"

namespace tdesign {

struct CertifyOptions {
  // Exact-moment varieties: absolute tolerance on every monomial moment.
  double tol = 1e-8;
  // Monte Carlo moments: tolerance is se_factor * SE_alpha + mc_floor.
  double se_factor = 3.0;
  double mc_floor = 1e-8;
  // Seed for any basis built to evaluate the lower bound.
  std::uint64_t seed = 0;
  // Skips the lower-bound computation when already known.
  std::optional<int> known_lower_bound;
};

struct DesignReport {
  std::string variety;
  int t = 0;
  int N = 0;
  double worst_monomial_error = 0.0;
  Exponent worst_alpha;
  // Standard error of the reference moment at worst_alpha (0 if exact).
  double worst_standard_error = 0.0;
  // Tolerance applied at worst_alpha.
  double tolerance = 0.0;
  // Filled by the caller; certification itself never touches the kernel.
  std::optional<double> normalized_potential;
  bool is_design_at_tol = false;
  int lower_bound = 1;
  bool meets_lower_bound = true;
  bool tight = false;
  std::optional<std::vector<double>> kernel_diagonal;
  std::optional<double> newton_energy;
  QuadratureKind quadrature_kind = QuadratureKind::exact_moments;
  bool exact_reference = false;
  std::vector<std::string> notes;
};

// Compares the equal-weight monomial averages of X against the exact moments
// when the variety has them, otherwise against rule.
DesignReport certify_design(const Variety& variety, int t, const PointConfig& X, const QuadratureRule& rule,
                            const CertifyOptions& options = {});

// dim P_s(M) for s = floor(t/2): closed form on spheres, numerical rank elsewhere.
int lower_bound(const Variety& variety, int t, std::uint64_t seed = 0);

struct TightReport {
  bool tight = false;
  bool dimension_match = false;
  // max |G_ij - N delta_ij| / N
  double max_relative_deviation = 0.0;
  std::vector<double> diagonal;
};

// basis_half: full basis of P_{t/2}. Requires even t.
TightReport tight_check(const OrthoBasis& basis_half, int t, const PointConfig& X, double rel_tol = 1e-6);

// sum_{i<j} |x_i - x_j|^-(d-1); log energy sum -log|x_i - x_j| when d = 1.
double newton_energy(const PointConfig& X, int d);

}  // namespace tdesign
