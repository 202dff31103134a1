#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tdesign/multipoly.hpp"
#include "tdesign/numeric.hpp"
#include "tdesign/polyspace.hpp"
#include "tdesign/quadrature.hpp"
#include "tdesign/variety.hpp"

namespace tdesign {

// eps/2 on [0, eps/2], x on [eps, inf), cubic Hermite in between.
double u_epsilon(double x, double eps);
double u_epsilon_derivative(double x, double eps);

struct FlowOptions {
  double epsilon = 0.25;
  double s0 = 1.0;
  double step = 0.01;
  int max_steps = 1'000'000;
};

void validate(const FlowOptions& opts);

// epsilon = 1/(2K), s0 = 3 K^2 |R|, step = min(epsilon, |R|)/10.
FlowOptions theoretical_flow_options(double K, double norm_R);

// Explicit Euler with retraction for dy/ds = grad_t P / U_eps(|grad_t P|).
PointConfig flow(const ZeroMeanBasis& zb, const MultiPoly& P, const PointConfig& X0, const FlowOptions& opts);

// Scales P so that int |grad_t P| d mu = 1 under rule.
MultiPoly normalize_gradient_mass(const Variety& variety, const MultiPoly& P, const QuadratureRule& rule);

struct FlowAudit {
  bool degenerate = false;
  double initial_mean = 0.0;
  double final_mean = 0.0;
  // |(1/N) sum P(x_i)| against K |R|.
  double splitting_lhs = 0.0;
  double splitting_rhs = 0.0;
  // Smallest (1/N) sum |grad_t P|^2 / U_eps(|grad_t P|) over s <= min(s0, |R|).
  double min_derivative = 0.0;
  double derivative_bound = 0.0;
  bool vacuous = false;
  bool splitting_held = false;
  bool derivative_held = false;
  bool increased = false;
  bool positive = false;
  bool passed = false;
  int steps = 0;
};

FlowAudit flow_lower_bound_audit(const ZeroMeanBasis& zb, const MultiPoly& P, const PointConfig& X0,
                                 const FlowOptions& opts, double K_est, double norm_R);

// Sum over i, j of K(x_i, x_j) = N^2 |moments|^2.
double design_energy(const ZeroMeanBasis& zb, const PointConfig& X);
// Tangential gradient of design_energy with respect to each point (n x N).
Eigen::MatrixXd design_gradient(const ZeroMeanBasis& zb, const PointConfig& X);

enum class DescentMethod { levenberg_marquardt, steepest };

std::string to_string(DescentMethod m);
DescentMethod descent_method_from_string(const std::string& s);

struct DesignOptions {
  // converged when the normalized potential reaches tol
  double tol = 1e-20;
  // iteration continues toward this level while progress is made
  double polish_tol = 1e-28;
  int max_iter = 2000;
  DescentMethod method = DescentMethod::levenberg_marquardt;
  double armijo_factor = 0.5;
  double armijo_c = 1e-4;
  std::uint64_t seed = 0;
};

struct DesignRun {
  PointConfig initial;
  PointConfig final;
  // normalized potential at accepted iterates
  std::vector<double> potential_history;
  int iterations = 0;
  bool converged = false;
  double final_potential = 0.0;
  double final_normalized_potential = 0.0;
  double gradient_norm = 0.0;
  DesignOptions options;
  std::vector<std::string> warnings;
};

// Minimizes the design potential from init. floor_dim, when given, is
// dim P_{floor(t/2)}; a smaller N triggers a warning.
DesignRun construct_design(const ZeroMeanBasis& zb, const PointConfig& init, const DesignOptions& opts = {},
                           std::optional<int> floor_dim = std::nullopt);

// ceil(c t^d) with c = ceil(4 dim P_t / t^d) when multiplier is not given.
int auto_design_size(int t, int d, int space_dim, std::optional<double> multiplier = std::nullopt);

// Centers of an area-regular partition with 100 N sample points.
PointConfig partition_init(const Variety& variety, int N, std::uint64_t seed);

}  // namespace tdesign
