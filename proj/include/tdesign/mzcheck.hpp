#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdesign/multipoly.hpp"
#include "tdesign/partition.hpp"
#include "tdesign/polyspace.hpp"
#include "tdesign/quadrature.hpp"
#include "tdesign/variety.hpp"

namespace tdesign {

enum class MZKind { absolute_value, gradient, vector };

std::string to_string(MZKind kind);

struct MZReport {
  std::string variety;
  int t = 0;
  int N = 0;
  double multiplier = 0.0;
  int trials = 0;
  int pick_draws = 0;
  double worst_ratio_low = 1.0;
  double worst_ratio_high = 1.0;
  MZKind kind = MZKind::absolute_value;
  bool extremal_picks = false;
  // Ratios outside the bounds by more than the Monte Carlo margin.
  int violations = 0;
  // Ratios outside the bounds but within the Monte Carlo margin.
  int inconclusive = 0;
  std::optional<double> A_estimate;
  std::optional<double> K_estimate;
  // Vector kind: every trial respected the component-sum sandwich.
  std::optional<bool> vector_bound_ok;
};

struct MZRatio {
  double ratio = 0.0;
  // Standard error from the Monte Carlo denominator.
  double standard_error = 0.0;
};

// [(1/N) sum |f(x_i)|] / int |f| d mu, the integral realized by rule.
MZRatio mz_ratio(const PointConfig& picks, const MultiPoly& f, const QuadratureRule& rule);
// Same with |grad_t f|.
MZRatio mz_gradient_ratio(const Variety& variety, const PointConfig& picks, const MultiPoly& f,
                          const QuadratureRule& rule);

struct VectorMZResult {
  double ratio = 0.0;           // with |Q| the Euclidean norm of the vector
  double component_ratio = 0.0; // with sum_j |Q_j|
  bool bound_ok = true;         // ratio within [component_ratio / sqrt m, sqrt m component_ratio]
};

VectorMZResult mz_vector_ratio(const PointConfig& picks, const std::vector<MultiPoly>& components,
                               const QuadratureRule& rule);

struct MZSweepOptions {
  MZKind kind = MZKind::absolute_value;
  int pick_draws = 1;
  std::size_t dense_nodes = 1'000'000;
  std::size_t sample_per_region = 100;
  double low = 0.5;
  double high = 1.5;
  // Violations within this many standard errors of a bound are inconclusive.
  double se_factor = 3.0;
  // Vector kind: number of stacked components (0 means 2d).
  int vector_components = 0;
  // Gradient kind: ratios are judged against [1/K, K] when set.
  std::optional<double> gradient_bound;
  // Instead of random picks, each trial uses the per-region minimizer (low
  // ratio) and maximizer (high ratio) of the integrand over the sample, so
  // the worst ratios cover every choice of picks. Not for the vector kind.
  bool extremal_picks = false;
};

// One report per (t, multiplier): N = ceil(c t^d), random unit-norm
// polynomials, random (or extremal) picks per region.
std::vector<MZReport> mz_sweep(const Variety& variety, const std::vector<int>& t_list,
                               const std::vector<double>& multipliers, int trials, std::uint64_t seed,
                               const MZSweepOptions& options = {});

// Smallest multiplier such that it and all larger ones show no violation.
std::optional<double> a_estimate(const std::vector<MZReport>& reports, int t);
// max(high, 1/low) over reports of degree t with multiplier >= c_min.
std::optional<double> k_estimate(const std::vector<MZReport>& reports, int t, double c_min);

const std::vector<double>& default_multipliers();

}  // namespace tdesign
