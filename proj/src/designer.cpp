#include "tdesign/designer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "tdesign/error.hpp"
#include "tdesign/partition.hpp"

namespace tdesign {

namespace {

struct Linearization {
  Eigen::VectorXd moments;
  double potential = 0.0;
  std::vector<Eigen::MatrixXd> tangent;   // n x d per point
  std::vector<Eigen::MatrixXd> jac;       // m0 x n per point
};

Linearization linearize(const ZeroMeanBasis& zb, const PointConfig& X, bool with_jacobians) {
  Linearization L;
  const DesignFunctional df = design_functional(zb, X);
  L.moments = df.moments;
  L.potential = df.potential;
  if (!with_jacobians) return L;
  const Eigen::Index N = X.size();
  L.tangent.resize(static_cast<std::size_t>(N));
  L.jac.resize(static_cast<std::size_t>(N));
  for (Eigen::Index i = 0; i < N; ++i) {
    const Eigen::VectorXd x = X.coords.col(i);
    L.tangent[static_cast<std::size_t>(i)] = tangent_basis(zb.variety(), x);
    L.jac[static_cast<std::size_t>(i)] = zb.gradient(x);
  }
  return L;
}

// X_i + T_i step_i, retracted; nullopt if any retraction fails.
std::optional<PointConfig> retract_step(const Variety& variety, const PointConfig& X, const Linearization& L,
                                        const Eigen::VectorXd& step, double alpha) {
  const int d = variety.intrinsic_dim();
  PointConfig out(X.ambient_dim(), X.size());
  try {
    for (Eigen::Index i = 0; i < X.size(); ++i) {
      const Eigen::VectorXd y =
          X.coords.col(i) + alpha * (L.tangent[static_cast<std::size_t>(i)] * step.segment(i * d, d));
      out.coords.col(i) = project_to_variety(variety, y).coords;
    }
  } catch (const NumericalError&) {
    return std::nullopt;
  }
  return out;
}

void jitter_coincident(const Variety& variety, PointConfig& X, std::uint64_t seed, std::vector<std::string>& warnings) {
  auto rng = make_rng(seed, {0x717e});
  std::normal_distribution<double> g;
  int moved = 0;
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if ((X.coords.col(i) - X.coords.col(j)).norm() >= 1e-10) continue;
      const Eigen::MatrixXd T = tangent_basis(variety, X.coords.col(i));
      Eigen::VectorXd v(T.cols());
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = g(rng);
      X.coords.col(i) = project_to_variety(variety, X.coords.col(i) + 1e-6 * (T * v.normalized())).coords;
      ++moved;
      break;
    }
  }
  if (moved > 0) {
    std::ostringstream msg;
    msg << "jittered " << moved << " coincident point(s)";
    warnings.push_back(msg.str());
  }
}

}  // namespace

double u_epsilon(double x, double eps) {
  const double a = 0.5 * eps;
  if (x <= a) return a;
  if (x >= eps) return x;
  const double h = eps - a;
  const double s = (x - a) / h;
  const double s2 = s * s, s3 = s2 * s;
  // values (eps/2, eps), slopes (0, 1)
  return (2 * s3 - 3 * s2 + 1) * a + (-2 * s3 + 3 * s2) * eps + (s3 - s2) * h;
}

double u_epsilon_derivative(double x, double eps) {
  const double a = 0.5 * eps;
  if (x <= a) return 0.0;
  if (x >= eps) return 1.0;
  const double s = (x - a) / (eps - a);
  return 4 * s - 3 * s * s;
}

void validate(const FlowOptions& opts) {
  if (!(opts.epsilon > 0.0)) throw InputError("flow epsilon must be positive");
  if (!(opts.step > 0.0) || opts.step > opts.s0) throw InputError("flow step must lie in (0, s0]");
  if (opts.max_steps < 1) throw InputError("flow needs max_steps >= 1");
}

FlowOptions theoretical_flow_options(double K, double norm_R) {
  if (!(K > 0.0) || !(norm_R > 0.0)) throw InputError("flow recipe needs K > 0 and |R| > 0");
  FlowOptions o;
  o.epsilon = 1.0 / (2.0 * K);
  o.s0 = 3.0 * K * K * norm_R;
  o.step = std::min(o.epsilon, norm_R) / 10.0;
  o.max_steps = std::max(1, static_cast<int>(std::ceil(o.s0 / o.step)) + 1);
  return o;
}

namespace {

void check_zero_mean(const ZeroMeanBasis& zb, const MultiPoly& P) {
  const QuadratureRule& rule = zb.parent().quadrature();
  Eigen::VectorXd v(static_cast<Eigen::Index>(rule.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = P.evaluate(rule.nodes.coords.col(i));
  if (std::abs(integrate(rule, v)) > 1e-8 * std::max(1.0, v.cwiseAbs().maxCoeff())) {
    throw InputError("flow polynomial must have zero mean on the variety");
  }
}

Eigen::VectorXd flow_field(const Variety& variety, const MultiPoly& P, const Eigen::VectorXd& y, double eps,
                           double* grad_norm) {
  const Eigen::VectorXd g = tangential_gradient(variety, P, y);
  const double gn = g.norm();
  if (grad_norm) *grad_norm = gn;
  return g / u_epsilon(gn, eps);
}

int flow_steps(const FlowOptions& opts) {
  const int steps = static_cast<int>(std::ceil(opts.s0 / opts.step - 1e-12));
  if (steps > opts.max_steps) throw InputError("flow horizon needs more than max_steps steps");
  return std::max(steps, 1);
}

}  // namespace

PointConfig flow(const ZeroMeanBasis& zb, const MultiPoly& P, const PointConfig& X0, const FlowOptions& opts) {
  validate(opts);
  check_zero_mean(zb, P);
  const Variety& variety = zb.variety();
  const int steps = flow_steps(opts);
  const double h = opts.s0 / steps;
  PointConfig X = X0;
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    Eigen::VectorXd y = X.coords.col(i);
    for (int s = 0; s < steps; ++s) {
      const Eigen::VectorXd v = flow_field(variety, P, y, opts.epsilon, nullptr);
      if (v.squaredNorm() == 0.0) break;
      try {
        y = project_to_variety(variety, y + h * v).coords;
      } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << "flow retraction failed for point " << i << " at step " << s << ": " << e.what();
        throw FlowError(msg.str());
      }
    }
    X.coords.col(i) = y;
  }
  return X;
}

MultiPoly normalize_gradient_mass(const Variety& variety, const MultiPoly& P, const QuadratureRule& rule) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(rule.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = tangential_gradient(variety, P, rule.nodes.coords.col(i)).norm();
  const double mass = integrate(rule, v);
  if (mass < 1e-14) throw DegenerateError("integral of |grad_t P| vanishes");
  return P * (1.0 / mass);
}

FlowAudit flow_lower_bound_audit(const ZeroMeanBasis& zb, const MultiPoly& P, const PointConfig& X0,
                                 const FlowOptions& opts, double K_est, double norm_R) {
  validate(opts);
  const Variety& variety = zb.variety();
  FlowAudit a;
  a.derivative_bound = 1.0 / K_est - opts.epsilon;
  a.vacuous = a.derivative_bound <= 0.0;
  a.splitting_rhs = K_est * norm_R;
  const Eigen::Index N = X0.size();
  auto mean_value = [&](const PointConfig& X) {
    Eigen::VectorXd v(N);
    for (Eigen::Index i = 0; i < N; ++i) v[i] = P.evaluate(X.coords.col(i));
    return pairwise_sum(v) / static_cast<double>(N);
  };
  a.initial_mean = mean_value(X0);
  a.splitting_lhs = std::abs(a.initial_mean);
  if (P.is_zero()) {
    a.degenerate = true;
    a.final_mean = a.initial_mean;
    return a;
  }
  check_zero_mean(zb, P);
  const int steps = flow_steps(opts);
  const double h = opts.s0 / steps;
  const double window = std::min(opts.s0, norm_R);
  PointConfig X = X0;
  a.min_derivative = std::numeric_limits<double>::infinity();
  Eigen::VectorXd deriv(N);
  for (int s = 0; s <= steps; ++s) {
    const bool in_window = s * h <= window * (1 + 1e-12);
    PointConfig next = X;
    for (Eigen::Index i = 0; i < N; ++i) {
      double gn = 0.0;
      const Eigen::VectorXd y = X.coords.col(i);
      const Eigen::VectorXd v = flow_field(variety, P, y, opts.epsilon, &gn);
      deriv[i] = gn * gn / u_epsilon(gn, opts.epsilon);
      if (s < steps && v.squaredNorm() > 0.0) {
        try {
          next.coords.col(i) = project_to_variety(variety, y + h * v).coords;
        } catch (const NumericalError& e) {
          std::ostringstream msg;
          msg << "flow retraction failed for point " << i << " at step " << s << ": " << e.what();
          throw FlowError(msg.str());
        }
      }
    }
    if (in_window) a.min_derivative = std::min(a.min_derivative, pairwise_sum(deriv) / static_cast<double>(N));
    if (s < steps) X = std::move(next);
  }
  a.steps = steps;
  a.final_mean = mean_value(X);
  if (a.min_derivative == 0.0) a.degenerate = true;
  a.splitting_held = a.splitting_lhs <= a.splitting_rhs;
  a.derivative_held = !a.vacuous && a.min_derivative >= a.derivative_bound;
  a.increased = a.final_mean > a.initial_mean;
  a.positive = a.final_mean > 0.0;
  a.passed = a.splitting_held && a.derivative_held;
  return a;
}

double design_energy(const ZeroMeanBasis& zb, const PointConfig& X) {
  const double N = static_cast<double>(X.size());
  return N * N * design_functional(zb, X).potential;
}

Eigen::MatrixXd design_gradient(const ZeroMeanBasis& zb, const PointConfig& X) {
  const Eigen::VectorXd m = design_functional(zb, X).moments;
  const double N = static_cast<double>(X.size());
  Eigen::MatrixXd G(X.ambient_dim(), X.size());
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    const Eigen::VectorXd x = X.coords.col(i);
    const Eigen::VectorXd euclid = 2.0 * N * (zb.gradient(x).transpose() * m);
    G.col(i) = tangent_projector(zb.variety(), x) * euclid;
  }
  return G;
}

std::string to_string(DescentMethod m) {
  return m == DescentMethod::levenberg_marquardt ? "levenberg_marquardt" : "steepest";
}

DescentMethod descent_method_from_string(const std::string& s) {
  if (s == "levenberg_marquardt" || s == "lm") return DescentMethod::levenberg_marquardt;
  if (s == "steepest") return DescentMethod::steepest;
  throw InputError("unknown descent method '" + s + "'");
}

DesignRun construct_design(const ZeroMeanBasis& zb, const PointConfig& init, const DesignOptions& opts,
                           std::optional<int> floor_dim) {
  const Variety& variety = zb.variety();
  if (init.size() < 1) throw InputError("design construction needs at least one point");
  if (init.ambient_dim() != variety.ambient_dim()) throw InputError("initial points have the wrong dimension");
  DesignRun run;
  run.options = opts;
  const Eigen::Index N = init.size();
  const int d = variety.intrinsic_dim();
  const int m0 = zb.dim();
  if (floor_dim && N < *floor_dim) {
    std::ostringstream msg;
    msg << "N = " << N << " is below dim P_floor(t/2) = " << *floor_dim << "; no t-design can exist";
    run.warnings.push_back(msg.str());
  }
  PointConfig X(variety.ambient_dim(), N);
  for (Eigen::Index i = 0; i < N; ++i) X.coords.col(i) = project_to_variety(variety, init.coords.col(i)).coords;
  jitter_coincident(variety, X, opts.seed, run.warnings);
  run.initial = X;

  const double norm = m0 > 0 ? 1.0 / m0 : 0.0;
  Linearization L = linearize(zb, X, true);
  run.potential_history.push_back(L.potential * norm);
  Eigen::VectorXd prev_grad;
  PointConfig prev_X;
  int slow = 0;
  std::string stop_reason;
  for (int iter = 0; iter < opts.max_iter && m0 > 0; ++iter) {
    if (L.potential * norm <= opts.polish_tol) break;
    Eigen::MatrixXd J(m0, N * d);
    for (Eigen::Index i = 0; i < N; ++i) {
      J.middleCols(i * d, d) = L.jac[static_cast<std::size_t>(i)] * L.tangent[static_cast<std::size_t>(i)] / static_cast<double>(N);
    }
    const Eigen::VectorXd g = 2.0 * J.transpose() * L.moments;
    run.gradient_norm = g.norm();
    if (run.gradient_norm == 0.0) break;

    std::vector<Eigen::VectorXd> directions;
    if (opts.method == DescentMethod::levenberg_marquardt) {
      const double lam = std::sqrt(L.potential) * J.squaredNorm() / m0 + 1e-300;
      Eigen::VectorXd delta;
      if (N * d >= m0) {
        Eigen::MatrixXd A = J * J.transpose();
        A.diagonal().array() += lam;
        delta = -J.transpose() * A.ldlt().solve(L.moments);
      } else {
        Eigen::MatrixXd A = J.transpose() * J;
        A.diagonal().array() += lam;
        delta = -A.ldlt().solve(J.transpose() * L.moments);
      }
      directions.push_back(delta);
    }
    // Steepest descent with a Barzilai-Borwein length (fallback for the LM step).
    double bb = 1.0 / std::max(run.gradient_norm, 1e-300);
    if (prev_grad.size() == g.size() && prev_X.size() == N) {
      Eigen::VectorXd s(N * d), y = g - prev_grad;
      for (Eigen::Index i = 0; i < N; ++i) {
        s.segment(i * d, d) = L.tangent[static_cast<std::size_t>(i)].transpose() * (X.coords.col(i) - prev_X.coords.col(i));
      }
      const double sy = s.dot(y);
      if (sy > 0.0) bb = s.squaredNorm() / sy;
    }
    directions.push_back(-bb * g);

    bool accepted = false;
    for (const Eigen::VectorXd& dir : directions) {
      const double slope = g.dot(dir);
      if (!(slope < 0.0)) continue;
      double alpha = 1.0;
      for (int ls = 0; ls < 60; ++ls, alpha *= opts.armijo_factor) {
        auto Xn = retract_step(variety, X, L, dir, alpha);
        if (!Xn) continue;
        Linearization Ln = linearize(zb, *Xn, false);
        if (Ln.potential <= L.potential + opts.armijo_c * alpha * slope) {
          prev_grad = g;
          prev_X = X;
          const double ratio = L.potential > 0.0 ? Ln.potential / L.potential : 0.0;
          slow = ratio > 1.0 - 1e-10 ? slow + 1 : 0;
          X = std::move(*Xn);
          L = linearize(zb, X, true);
          accepted = true;
          break;
        }
      }
      if (accepted) break;
    }
    run.iterations = iter + 1;
    if (!accepted) {
      stop_reason = "line search found no decrease; stopping";
      break;
    }
    run.potential_history.push_back(L.potential * norm);
    if (slow >= 20) {
      stop_reason = "potential stagnated";
      break;
    }
  }
  run.final = X;
  run.final_potential = L.potential;
  run.final_normalized_potential = L.potential * norm;
  run.converged = run.final_normalized_potential <= opts.tol;
  // Stalling while polishing below tol is expected.
  if (!run.converged && !stop_reason.empty()) run.warnings.push_back(stop_reason);
  if (!run.converged && run.iterations >= opts.max_iter) run.warnings.push_back("iteration limit reached");
  return run;
}

int auto_design_size(int t, int d, int space_dim, std::optional<double> multiplier) {
  if (t <= 0) return std::max(1, static_cast<int>(std::ceil(multiplier.value_or(1.0))));
  const double td = std::pow(static_cast<double>(t), d);
  double c = multiplier.value_or(std::ceil(4.0 * space_dim / td - 1e-12));
  if (!(c > 0.0)) throw InputError("auto N needs a positive multiplier");
  return std::max(1, static_cast<int>(std::ceil(c * td - 1e-9)));
}

PointConfig partition_init(const Variety& variety, int N, std::uint64_t seed) {
  return area_regular_partition(variety, N, 100 * static_cast<std::size_t>(N), seed).centers;
}

}  // namespace tdesign
