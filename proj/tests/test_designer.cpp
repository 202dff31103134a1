#include <numbers>

#include <Eigen/Geometry>

#include "doctest.h"
#include "oracles.hpp"

#include "tdesign/certify.hpp"
#include "tdesign/designer.hpp"
#include "tdesign/error.hpp"
#include "tdesign/mzcheck.hpp"
#include "tdesign/partition.hpp"
#include "tdesign/variety.hpp"

using namespace tdesign;
using std::numbers::pi;

namespace {

ZeroMeanBasis zero_mean(const Variety& v, int t) {
  return zero_mean_subspace(std::make_shared<const OrthoBasis>(build_default_basis(v, t, 0)));
}

PointConfig rotate(const PointConfig& X, const Eigen::Matrix3d& Q) {
  PointConfig Y = X;
  Y.coords = Q * X.coords;
  return Y;
}

Eigen::Matrix3d some_rotation(double a) {
  return (Eigen::AngleAxisd(a, Eigen::Vector3d(1, 2, 3).normalized()) * Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

}  // namespace

TEST_CASE("u_epsilon values and smoothness") {
  const double eps = 0.2;
  CHECK(u_epsilon(0.0, eps) == 0.1);
  CHECK(u_epsilon(0.1, eps) == 0.1);
  CHECK(u_epsilon(0.2, eps) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(u_epsilon(3.0, eps) == 3.0);
  CHECK(u_epsilon_derivative(0.05, eps) == 0.0);
  CHECK(u_epsilon_derivative(0.5, eps) == 1.0);
  double prev = u_epsilon(0.0, eps), max_slope = 0.0;
  for (int k = 1; k <= 4000; ++k) {
    const double x = 0.3 * k / 4000.0;
    const double u = u_epsilon(x, eps);
    CHECK(u >= prev);
    CHECK(u >= eps / 2);
    prev = u;
    const double dv = u_epsilon_derivative(x, eps);
    max_slope = std::max(max_slope, dv);
    if (x > eps / 2 && x < eps) CHECK((dv > 0.0 && dv <= 4.0 / 3.0 + 1e-12));
    const double h = 1e-7;
    if (x > h) CHECK(dv == doctest::Approx((u_epsilon(x + h, eps) - u_epsilon(x - h, eps)) / (2 * h)).epsilon(1e-5).scale(1.0));
  }
  // Midpoint of the blend on eps = 1: value 11/16, slope 5/4.
  CHECK(u_epsilon(0.75, 1.0) == doctest::Approx(0.6875).epsilon(1e-15));
  CHECK(u_epsilon_derivative(0.75, 1.0) == doctest::Approx(1.25).epsilon(1e-15));
  // The Hermite blend between slopes 0 and 1 overshoots to 4/3 at two thirds of the way.
  CHECK(max_slope == doctest::Approx(4.0 / 3.0).epsilon(1e-5));
  CHECK(u_epsilon_derivative(eps / 2 + 2.0 / 3.0 * eps / 2, eps) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("flow option recipe and validation") {
  const FlowOptions o = theoretical_flow_options(2.0, 0.3);
  CHECK(o.epsilon == 0.25);
  CHECK(o.s0 == doctest::Approx(3.6));
  CHECK(o.step == doctest::Approx(0.025));
  CHECK_NOTHROW(validate(o));
  CHECK_THROWS_AS(theoretical_flow_options(0.0, 1.0), InputError);
  FlowOptions bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(validate(bad), InputError);
  bad = FlowOptions{};
  bad.step = 2.0;
  CHECK_THROWS_AS(validate(bad), InputError);
}

TEST_CASE("flow along x3 follows the meridian") {
  const Variety s = make_sphere(2);
  const ZeroMeanBasis zb = zero_mean(s, 2);
  const MultiPoly x3 = MultiPoly::variable(3, 2);
  PointConfig X(3, 1);
  X.coords << 1, 0, 0;
  FlowOptions o;
  o.epsilon = 0.25;
  o.s0 = 0.5;
  o.step = 1e-3;
  // At unit gradient speed the latitude grows like s while cos(latitude) >= eps.
  const PointConfig Y = flow(zb, x3, X, o);
  CHECK(Y.coords(2, 0) == doctest::Approx(std::sin(0.5)).epsilon(1e-4));
  CHECK(std::abs(Y.coords(1, 0)) <= 1e-14);
  CHECK(Y.coords.col(0).norm() == doctest::Approx(1.0).epsilon(1e-14));

  // Past the cap where |grad| < eps the speed drops, so x3 never overshoots 1.
  o.s0 = 5.0;
  o.step = 1e-2;
  const PointConfig Z = flow(zb, x3, X, o);
  CHECK(Z.coords(2, 0) > 0.99);
  CHECK(s.residual_norm(Z.point(0)) <= s.tolerance_at(Z.point(0)));

  // The zero polynomial leaves every point fixed.
  std::mt19937_64 rng(1);
  const PointConfig R = oracle::random_sphere_points(3, 6, rng);
  CHECK(flow(zb, MultiPoly(3), R, o) == R);

  // A polynomial with non-zero mean is rejected.
  CHECK_THROWS_AS(flow(zb, MultiPoly::constant(3, 1.0), R, o), InputError);
}

TEST_CASE("flow depends continuously on the polynomial") {
  const Variety s = make_sphere(2);
  const ZeroMeanBasis zb = zero_mean(s, 3);
  std::mt19937_64 rng(4);
  const PointConfig X = oracle::random_sphere_points(3, 10, rng);
  Eigen::VectorXd c = Eigen::VectorXd::Random(zb.dim()), dc = Eigen::VectorXd::Random(zb.dim());
  const MultiPoly P = zb.combination(c);
  FlowOptions o;
  o.s0 = 0.3;
  o.step = 0.01;
  const PointConfig base = flow(zb, P, X, o);
  double prev = std::numeric_limits<double>::infinity();
  for (double delta : {1e-2, 1e-4, 1e-6}) {
    const PointConfig moved = flow(zb, zb.combination(c + delta * dc), X, o);
    const double diff = (moved.coords - base.coords).cwiseAbs().maxCoeff();
    CHECK(diff < prev);
    prev = diff;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("gradient mass normalization") {
  const Variety s = make_sphere(2);
  const QuadratureRule rule = make_quadrature(s, default_quadrature(s, 6, 0));
  const MultiPoly P = normalize_gradient_mass(s, 3.0 * MultiPoly::variable(3, 2), rule);
  // int sqrt(1 - x3^2) = pi/4 on S^2.
  CHECK(P.evaluate(Eigen::Vector3d(0, 0, 1)) == doctest::Approx(4.0 / pi).epsilon(2e-3));
  CHECK_THROWS_AS(normalize_gradient_mass(s, MultiPoly::constant(3, 1.0), rule), DegenerateError);
}

TEST_CASE("flow audit") {
  const Variety s = make_sphere(2);
  const ZeroMeanBasis zb = zero_mean(s, 2);
  std::mt19937_64 rng(12);
  const PointConfig X = oracle::random_sphere_points(3, 20, rng);
  FlowOptions o;
  o.epsilon = 0.1;
  o.s0 = 0.5;
  o.step = 0.01;
  const FlowAudit zero = flow_lower_bound_audit(zb, MultiPoly(3), X, o, 2.0, 0.5);
  CHECK(zero.degenerate);
  CHECK(!zero.passed);

  const QuadratureRule& rule = zb.parent().quadrature();
  const MultiPoly P = normalize_gradient_mass(s, zb.function(0), rule);
  const FlowAudit a = flow_lower_bound_audit(zb, P, X, o, 2.0, 0.5);
  CHECK(!a.degenerate);
  CHECK(!a.vacuous);
  CHECK(a.derivative_bound == doctest::Approx(0.4));
  CHECK(a.splitting_rhs == doctest::Approx(1.0));
  CHECK(a.steps == 50);
  CHECK(a.increased);
  CHECK(a.passed == (a.splitting_held && a.derivative_held));

  // The octahedron vertices are critical points of the diagonal quadratic P.
  const FlowAudit still = flow_lower_bound_audit(zb, P, oracle::octahedron(), o, 2.0, 0.5);
  CHECK(still.min_derivative <= 1e-20);
  CHECK(still.final_mean == doctest::Approx(still.initial_mean).epsilon(1e-12).scale(1.0));

  o.epsilon = 0.5;
  const FlowAudit v = flow_lower_bound_audit(zb, P, X, o, 2.0, 0.5);
  CHECK(v.vacuous);
  CHECK(!v.derivative_held);
  CHECK(!v.passed);
}

TEST_CASE("flow audit holds statistically with the extremal K estimate") {
  const Variety s = make_sphere(2);
  const int t = 3, N = 4 * t * t;
  MZSweepOptions mz;
  mz.kind = MZKind::gradient;
  mz.extremal_picks = true;
  mz.dense_nodes = 200'000;
  const double K = mz_sweep(s, {t}, {4.0}, 20, 21, mz).front().K_estimate.value();
  const Partition p = area_regular_partition(s, N, 100 * static_cast<std::size_t>(N), 21);
  const FlowOptions fo = theoretical_flow_options(K, p.norm_R);
  const ZeroMeanBasis zb = zero_mean(s, t);
  int passed = 0, increased = 0;
  for (int k = 0; k < 100; ++k) {
    auto rng = make_rng(7, {static_cast<std::uint64_t>(k)});
    std::normal_distribution<double> g;
    Eigen::VectorXd c(zb.dim());
    for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = g(rng);
    const MultiPoly P = normalize_gradient_mass(s, zb.combination(c), zb.parent().quadrature());
    const FlowAudit a = flow_lower_bound_audit(zb, P, pick_random(p, 50 + k), fo, K, p.norm_R);
    passed += a.passed;
    increased += a.increased;
  }
  CHECK(passed >= 95);
  CHECK(increased == 100);
}

TEST_CASE("design energy and gradient") {
  const Variety s = make_sphere(2);
  const ZeroMeanBasis zb = zero_mean(s, 3);
  std::mt19937_64 rng(9);
  const PointConfig X = oracle::random_sphere_points(3, 7, rng);
  // Double sum of the kernel.
  double ref = 0.0;
  for (Eigen::Index i = 0; i < X.size(); ++i)
    for (Eigen::Index j = 0; j < X.size(); ++j) ref += kernel_eval(zb, X.point(i), X.point(j));
  CHECK(design_energy(zb, X) == doctest::Approx(ref).epsilon(1e-11));

  const Eigen::MatrixXd G = design_gradient(zb, X);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    const Eigen::MatrixXd T = tangent_basis(s, X.point(i));
    for (Eigen::Index k = 0; k < T.cols(); ++k) {
      PointConfig P = X, M = X;
      P.coords.col(i) = project_to_variety(s, X.point(i) + h * T.col(k)).coords;
      M.coords.col(i) = project_to_variety(s, X.point(i) - h * T.col(k)).coords;
      const double fd = (design_energy(zb, P) - design_energy(zb, M)) / (2 * h);
      CHECK(G.col(i).dot(T.col(k)) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
    CHECK(std::abs(G.col(i).dot(X.point(i))) <= 1e-10);
  }

  // Permuting the points permutes the gradient columns.
  PointConfig Xp = X;
  std::vector<int> perm{3, 0, 6, 1, 5, 2, 4};
  for (int i = 0; i < 7; ++i) Xp.coords.col(i) = X.coords.col(perm[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd Gp = design_gradient(zb, Xp);
  for (int i = 0; i < 7; ++i) CHECK((Gp.col(i) - G.col(perm[static_cast<std::size_t>(i)])).norm() <= 1e-10);
  CHECK(design_energy(zb, Xp) == doctest::Approx(design_energy(zb, X)).epsilon(1e-13));

  // Rotations of the sphere preserve the energy.
  CHECK(design_energy(zb, rotate(X, some_rotation(1.1))) == doctest::Approx(design_energy(zb, X)).epsilon(1e-10));
}

TEST_CASE("constructing small designs") {
  SUBCASE("equilateral triangle on the circle") {
    const ZeroMeanBasis zb = zero_mean(make_sphere(1), 2);
    const DesignRun run = construct_design(zb, partition_init(make_sphere(1), 3, 1));
    CHECK(run.converged);
    CHECK(run.final_normalized_potential <= 1e-20);
    // Equal pairwise distances.
    const PointConfig& X = run.final;
    const double a = (X.point(0) - X.point(1)).norm(), b = (X.point(1) - X.point(2)).norm(),
                 c = (X.point(0) - X.point(2)).norm();
    CHECK(a == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
    CHECK(b == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
    CHECK(c == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
  }
  SUBCASE("antipodal pair on S^2") {
    const ZeroMeanBasis zb = zero_mean(make_sphere(2), 1);
    const DesignRun run = construct_design(zb, partition_init(make_sphere(2), 2, 2));
    CHECK(run.converged);
    CHECK((run.final.point(0) + run.final.point(1)).norm() <= 1e-9);
  }
  SUBCASE("eight points on S^2 certify as a 3-design") {
    const Variety s = make_sphere(2);
    const ZeroMeanBasis zb = zero_mean(s, 3);
    const DesignRun run = construct_design(zb, partition_init(s, 8, 0));
    CHECK(run.converged);
    CHECK(run.gradient_norm <= 1e-6);
    for (std::size_t k = 1; k < run.potential_history.size(); ++k) {
      CHECK(run.potential_history[k] <= run.potential_history[k - 1]);
    }
    CHECK(run.iterations <= run.options.max_iter);
    const DesignReport rep = certify_design(s, 3, run.final, zb.parent().quadrature());
    CHECK(rep.is_design_at_tol);
    CHECK(rep.worst_monomial_error <= 1e-8);
  }
}

TEST_CASE("steepest descent decreases the potential") {
  const Variety s = make_sphere(2);
  const ZeroMeanBasis zb = zero_mean(s, 2);
  DesignOptions o;
  o.method = DescentMethod::steepest;
  o.max_iter = 200;
  const DesignRun run = construct_design(zb, partition_init(s, 12, 5), o);
  REQUIRE(run.potential_history.size() >= 2);
  for (std::size_t k = 1; k < run.potential_history.size(); ++k) {
    CHECK(run.potential_history[k] <= run.potential_history[k - 1]);
  }
  CHECK(run.potential_history.back() < run.potential_history.front());
  CHECK(descent_method_from_string(to_string(DescentMethod::steepest)) == DescentMethod::steepest);
  CHECK_THROWS_AS(descent_method_from_string("newton"), InputError);
}

TEST_CASE("symmetric images of a design are designs") {
  const Variety s = make_sphere(2);
  const ZeroMeanBasis zb = zero_mean(s, 3);
  const DesignRun run = construct_design(zb, partition_init(s, 10, 3));
  REQUIRE(run.converged);
  const PointConfig Y = rotate(run.final, some_rotation(0.7));
  CHECK(design_energy(zb, Y) / 100.0 <= 1e-18);
  Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
  flip(0, 0) = -1;
  CHECK(design_energy(zb, rotate(run.final, flip)) / 100.0 <= 1e-18);
}

TEST_CASE("floor rule and input checks") {
  const Variety s = make_sphere(2);
  const ZeroMeanBasis zb = zero_mean(s, 4);
  const int floor_dim = lower_bound(s, 4);
  CHECK(floor_dim == 9);
  DesignOptions o;
  o.max_iter = 20;
  const DesignRun run = construct_design(zb, partition_init(s, 5, 0), o, floor_dim);
  CHECK(!run.converged);
  bool warned = false;
  for (const auto& w : run.warnings) warned = warned || w.find("below") != std::string::npos;
  CHECK(warned);
  CHECK_THROWS_AS(construct_design(zb, PointConfig(3, 0)), InputError);
  CHECK_THROWS_AS(construct_design(zb, PointConfig(2, 3)), InputError);

  // Coincident starting points are separated before descent.
  PointConfig dup(3, 4);
  dup.coords << 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1;
  const DesignRun j = construct_design(zero_mean(s, 1), dup, o);
  bool jittered = false;
  for (const auto& w : j.warnings) jittered = jittered || w.find("jittered") != std::string::npos;
  CHECK(jittered);
}

TEST_CASE("automatic design size") {
  // dim P_3(S^2) = 16, t^d = 9, c = ceil(64 / 9) = 8.
  CHECK(auto_design_size(3, 2, 16, std::nullopt) == 72);
  CHECK(auto_design_size(3, 2, 16, 2.0) == 18);
  CHECK(auto_design_size(2, 1, 5, std::nullopt) == 20);
  CHECK(auto_design_size(4, 2, 25, 0.01) >= 1);
}
