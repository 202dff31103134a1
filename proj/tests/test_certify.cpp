#include <numbers>

#include <Eigen/Geometry>

#include "doctest.h"
#include "oracles.hpp"

#include "tdesign/certify.hpp"
#include "tdesign/error.hpp"
#include "tdesign/variety.hpp"

using namespace tdesign;

namespace {

PointConfig tetrahedron() {
  PointConfig X(3, 4);
  X.coords << 1, 1, -1, -1, 1, -1, 1, -1, 1, -1, -1, 1;
  X.coords /= std::sqrt(3.0);
  return X;
}

QuadratureRule rule_for(const Variety& v, int t) { return make_quadrature(v, default_quadrature(v, t, 0)); }

}  // namespace

TEST_CASE("octahedron is a 3-design and not a 4-design") {
  const Variety s = make_sphere(2);
  const PointConfig X = oracle::octahedron();
  const DesignReport r3 = certify_design(s, 3, X, rule_for(s, 3));
  CHECK(r3.is_design_at_tol);
  CHECK(r3.worst_monomial_error <= 1e-14);
  CHECK(r3.exact_reference);
  CHECK(r3.N == 6);
  CHECK(r3.lower_bound == 4);
  CHECK(r3.meets_lower_bound);
  CHECK(!r3.normalized_potential.has_value());

  const DesignReport r4 = certify_design(s, 4, X, rule_for(s, 4));
  CHECK(!r4.is_design_at_tol);
  // Average of x1^4 over the vertices is 1/3 against the sphere moment 1/5.
  CHECK(r4.worst_monomial_error == doctest::Approx(2.0 / 15.0).epsilon(1e-14));
  CHECK(r4.worst_alpha == Exponent{4, 0, 0});
  CHECK(r4.lower_bound == 9);
  CHECK(!r4.meets_lower_bound);
}

TEST_CASE("degree zero certifies any configuration") {
  std::mt19937_64 rng(2);
  for (const Variety& v : {make_sphere(2), make_torus(2, 1), make_grassmannian(1, 2)}) {
    PointConfig one(v.ambient_dim(), 1);
    if (v.kind() == VarietyKind::sphere) one = oracle::random_sphere_points(3, 1, rng);
    else if (v.kind() == VarietyKind::torus) one.coords.col(0) = oracle::torus_point(2, 1, 0.3, 1.2);
    else one.coords.col(0) = oracle::g12_point(0.7);
    const DesignReport r = certify_design(v, 0, one, rule_for(v, 0));
    CHECK(r.is_design_at_tol);
    CHECK(r.lower_bound == 1);
    CHECK(r.worst_monomial_error <= 1e-15);
  }
}

TEST_CASE("lower bounds") {
  CHECK(lower_bound(make_sphere(2), 4) == 9);
  CHECK(lower_bound(make_sphere(21), 4) == 275);
  CHECK(lower_bound(make_sphere(21), 4) == oracle::sphere_dim(21, 2));
  for (int t : {0, 1}) {
    CHECK(lower_bound(make_sphere(3), t) == 1);
    CHECK(lower_bound(make_torus(2, 1), t) == 1);
  }
  // dim P_1 of the torus: constants and the three coordinates.
  CHECK(lower_bound(make_torus(2, 1), 2) == 4);
  CHECK(lower_bound(make_grassmannian(1, 2), 4) == 5);
  CHECK_THROWS_AS(lower_bound(make_sphere(2), -1), InputError);
  for (int d : {1, 2, 4}) {
    int prev = 0;
    for (int t = 0; t <= 10; ++t) {
      const int b = lower_bound(make_sphere(d), t);
      CHECK(b >= prev);
      CHECK(b == oracle::sphere_dim(d, t / 2));
      prev = b;
    }
  }
}

TEST_CASE("tight designs") {
  SUBCASE("triangle on the circle") {
    const Variety c = make_sphere(1);
    const OrthoBasis half = build_default_basis(c, 1, 0);
    const TightReport r = tight_check(half, 2, oracle::regular_polygon(3, 0.4));
    CHECK(r.dimension_match);
    CHECK(r.tight);
    CHECK(r.max_relative_deviation <= 1e-12);
    REQUIRE(r.diagonal.size() == 3);
    for (double k : r.diagonal) CHECK(k == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("tetrahedron on S^2") {
    const TightReport r = tight_check(build_default_basis(make_sphere(2), 1, 0), 2, tetrahedron());
    CHECK(r.tight);
  }
  SUBCASE("non-tight configurations") {
    const Variety s = make_sphere(2);
    // The cube is a 3-design with 8 points, short of dim P_2 = 9.
    PointConfig cube(3, 8);
    for (int i = 0; i < 8; ++i) {
      for (int k = 0; k < 3; ++k) cube.coords(k, i) = ((i >> k) & 1 ? 1.0 : -1.0) / std::sqrt(3.0);
    }
    CHECK(certify_design(s, 3, cube, rule_for(s, 3)).is_design_at_tol);
    const TightReport r = tight_check(build_default_basis(s, 2, 0), 4, cube);
    CHECK(!r.dimension_match);
    CHECK(!r.tight);
    const TightReport o = tight_check(build_default_basis(s, 1, 0), 2, oracle::octahedron());
    CHECK(!o.tight);
    CHECK_THROWS_AS(tight_check(build_default_basis(s, 1, 0), 3, cube), InputError);
    CHECK_THROWS_AS(tight_check(build_default_basis(s, 1, 0), 4, cube), InputError);
  }
}

TEST_CASE("Newtonian and log energies") {
  PointConfig pair(3, 2);
  pair.coords << 0, 0, 0, 0, 1, -1;
  CHECK(newton_energy(pair, 2) == 0.5);
  const PointConfig oct = oracle::octahedron();
  CHECK(newton_energy(oct, 2) == doctest::Approx(1.5 + 12.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(newton_energy(oct, 2) == doctest::Approx(oracle::newton_energy_reversed(oct, 2)).epsilon(1e-14));
  std::mt19937_64 rng(8);
  const PointConfig R = oracle::random_sphere_points(5, 40, rng);
  CHECK(newton_energy(R, 4) == doctest::Approx(oracle::newton_energy_reversed(R, 4)).epsilon(1e-14));
  // For the regular N-gon, prod_{j != i} |x_i - x_j| = N.
  for (int N : {3, 7, 12}) {
    CHECK(newton_energy(oracle::regular_polygon(N, 0.1), 1) ==
          doctest::Approx(-0.5 * N * std::log(static_cast<double>(N))).epsilon(1e-13));
  }
  PointConfig dup(3, 2);
  dup.coords << 1, 1, 0, 0, 0, 0;
  CHECK_THROWS_AS(newton_energy(dup, 2), NumericalError);
  const DesignReport r = certify_design(make_sphere(2), 1, dup, rule_for(make_sphere(2), 1));
  CHECK(!r.newton_energy.has_value());
  CHECK(!r.notes.empty());
}

TEST_CASE("certification is invariant under isometries of the sphere") {
  const Variety s = make_sphere(2);
  const Eigen::Matrix3d Q = Eigen::AngleAxisd(0.83, Eigen::Vector3d(2, -1, 0.5).normalized()).toRotationMatrix();
  for (const PointConfig& X : {oracle::octahedron(), tetrahedron()}) {
    PointConfig Y = X;
    Y.coords = Q * X.coords;
    const int t = X.size() == 6 ? 3 : 2;
    const DesignReport a = certify_design(s, t, X, rule_for(s, t));
    const DesignReport b = certify_design(s, t, Y, rule_for(s, t));
    CHECK(a.is_design_at_tol);
    CHECK(b.is_design_at_tol);
    CHECK(b.worst_monomial_error <= 1e-14);
    CHECK(*b.newton_energy == doctest::Approx(*a.newton_energy).epsilon(1e-13));
  }
}

TEST_CASE("Monte Carlo reference on the Grassmannian") {
  const Variety g = make_grassmannian(1, 2);
  const QuadratureRule mc = make_quadrature(g, monte_carlo_descriptor(g, 200'000, 1));
  // G(1,2) is a circle of projectors; equally spaced angles in [0, pi) form designs.
  PointConfig X(3, 5);
  for (int i = 0; i < 5; ++i) X.coords.col(i) = oracle::g12_point(std::numbers::pi * i / 5.0 + 0.2);
  const DesignReport r = certify_design(g, 2, X, mc);
  CHECK(!r.exact_reference);
  CHECK(r.quadrature_kind == QuadratureKind::monte_carlo);
  CHECK(r.is_design_at_tol);
  CHECK(r.tolerance >= 1e-8);
  PointConfig bad(3, 2);
  bad.coords.col(0) = oracle::g12_point(0.0);
  bad.coords.col(1) = oracle::g12_point(0.1);
  CHECK(!certify_design(g, 2, bad, mc).is_design_at_tol);
}

TEST_CASE("certify input validation") {
  const Variety s = make_sphere(2);
  const QuadratureRule rule = rule_for(s, 2);
  CHECK_THROWS_AS(certify_design(s, -1, oracle::octahedron(), rule), InputError);
  CHECK_THROWS_AS(certify_design(s, 2, PointConfig(3, 0), rule), InputError);
  CHECK_THROWS_AS(certify_design(s, 2, PointConfig(2, 3), rule), InputError);
  CertifyOptions o;
  o.known_lower_bound = 42;
  CHECK(certify_design(s, 2, oracle::octahedron(), rule, o).lower_bound == 42);
}
