#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"

#include "tdesign/error.hpp"
#include "tdesign/serialize.hpp"

using namespace tdesign;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / ("tdesign_serialize_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

MultiPoly unit_circle_poly() {
  MultiPoly p(2);
  p.add_term({2, 0}, 1.0);
  p.add_term({0, 2}, 1.0);
  p.add_term({0, 0}, -1.0);
  return p;
}

}  // namespace

TEST_CASE("point sets round trip through JSON and CSV") {
  std::mt19937_64 rng(6);
  const PointConfig X = oracle::random_sphere_points(3, 25, rng);
  CHECK(points_from_json(points_to_json(X)) == X);
  CHECK(points_from_json(Json{{"points", points_to_json(X)}}) == X);
  CHECK(points_from_csv(points_to_csv(X)) == X);
  CHECK(points_from_csv("# header\n1, 0,0\n\n0,1,0\n").size() == 2);

  const fs::path dir = scratch_dir();
  write_json_file((dir / "p.json").string(), points_to_json(X));
  write_text(dir / "p.csv", points_to_csv(X));
  CHECK(load_points((dir / "p.json").string(), "json") == X);
  CHECK(load_points((dir / "p.csv").string(), "csv") == X);
  CHECK_THROWS_AS(load_points((dir / "p.csv").string(), "xml"), InputError);
  CHECK_THROWS_AS(load_points((dir / "missing.json").string(), "json"), InputError);
  fs::remove_all(dir);
}

TEST_CASE("malformed inputs raise parse errors") {
  CHECK_THROWS_AS(points_from_csv("1,2\n3\n"), ParseError);
  CHECK_THROWS_AS(points_from_csv("1,abc\n"), ParseError);
  CHECK_THROWS_AS(points_from_csv(""), ParseError);
  CHECK_THROWS_AS(points_from_json(Json::parse("[[1,2],[3]]")), ParseError);
  CHECK_THROWS_AS(points_from_json(Json::parse("[]")), ParseError);
  CHECK_THROWS_AS(points_from_json(Json::parse("[[1,\"a\"]]")), ParseError);
  CHECK_THROWS_AS(variety_from_json(Json::parse("[1]")), ParseError);
  CHECK_THROWS_AS(variety_from_json(Json::parse(R"({"name":"x","ambient_dim":2,"intrinsic_dim":1})")), ParseError);
  CHECK_THROWS_AS(variety_from_json(Json::parse(R"({"name":"x","ambient_dim":2,"intrinsic_dim":1,"polys":[[[[1.5,0],1]]]})")),
                  ParseError);

  const fs::path dir = scratch_dir();
  write_text(dir / "bad.json", "{\"name\": ");
  CHECK_THROWS_AS(read_json_file((dir / "bad.json").string()), ParseError);
  CHECK_THROWS_AS(load_variety_json((dir / "bad.json").string()), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("variety documents") {
  for (const std::string spec : {"sphere:2", "torus:2,1", "grassmann:1,3"}) {
    const Variety v = resolve_variety(spec);
    const Variety w = variety_from_json(variety_to_json(v));
    CHECK(w.name() == v.name());
    CHECK(w.kind() == v.kind());
    CHECK(w.ambient_dim() == v.ambient_dim());
    CHECK(w.intrinsic_dim() == v.intrinsic_dim());
    CHECK(variety_to_json(w) == variety_to_json(v));
  }
  const Variety c = make_custom_variety("circle", 2, 1, {unit_circle_poly()}, 3);
  const Json j = variety_to_json(c);
  CHECK(!j.contains("builtin"));
  const Variety back = variety_from_json(j);
  CHECK(back.name() == "circle");
  CHECK(back.kind() == VarietyKind::custom);
  CHECK(variety_to_json(back) == j);
  CHECK(back.residual_norm(Eigen::Vector2d(0.6, 0.8)) <= 1e-15);

  const fs::path dir = scratch_dir();
  write_json_file((dir / "circle.json").string(), j);
  CHECK(variety_to_json(resolve_variety((dir / "circle.json").string())) == j);
  fs::remove_all(dir);
}

TEST_CASE("quadrature descriptors round trip") {
  for (const QuadratureDescriptor& q :
       {default_quadrature(make_sphere(2), 3, 0), default_quadrature(make_torus(2, 1), 2, 0),
        monte_carlo_descriptor(make_grassmannian(1, 3), 5000, 11)}) {
    CHECK(quadrature_from_json(quadrature_to_json(q)) == q);
  }
}

TEST_CASE("bases round trip with bit-identical kernels") {
  std::mt19937_64 rng(3);
  for (const Variety& v : {make_sphere(2), make_grassmannian(1, 3)}) {
    const OrthoBasis b = build_default_basis(v, 3, 7);
    const Json j = basis_to_json(b);
    const fs::path dir = scratch_dir();
    write_json_file((dir / "basis.json").string(), j);
    const OrthoBasis c = basis_from_json(read_json_file((dir / "basis.json").string()));
    fs::remove_all(dir);
    CHECK(c.dim() == b.dim());
    CHECK(c.coeffs() == b.coeffs());
    CHECK(c.quadrature().nodes == b.quadrature().nodes);
    CHECK(c.rank_tol() == b.rank_tol());
    CHECK(c.singular_values() == b.singular_values());
    CHECK(basis_to_json(c) == j);
    const PointConfig X = v.kind() == VarietyKind::sphere ? oracle::random_sphere_points(3, 5, rng) : b.quadrature().nodes;
    for (Eigen::Index i = 0; i < 5; ++i) {
      for (Eigen::Index k = 0; k < 5; ++k) {
        CHECK(full_kernel_eval(c, X.point(i), X.point(k)) == full_kernel_eval(b, X.point(i), X.point(k)));
      }
    }
  }
  CHECK_THROWS_AS(basis_from_json(Json::parse("{}")), ParseError);
}

TEST_CASE("partitions round trip losslessly") {
  const Variety s = make_sphere(2);
  const Partition p = area_regular_partition(s, 100, 10'000, 2);
  const SandwichReport sw = ball_sandwich_check(p, s);
  const Json j = partition_to_json(p, sw);
  const Partition q = partition_from_json(Json::parse(j.dump(2)));
  CHECK(q.variety == p.variety);
  CHECK(q.N == p.N);
  CHECK(q.seed == p.seed);
  CHECK(q.sample == p.sample);
  CHECK(q.assignment == p.assignment);
  CHECK(q.centers == p.centers);
  CHECK(q.region_measure == p.region_measure);
  CHECK(q.region_diameter == p.region_diameter);
  CHECK(q.norm_R == p.norm_R);
  CHECK(partition_to_json(q, sw) == j);
  Json broken = j;
  broken["assignment"].erase(broken["assignment"].begin());
  CHECK_THROWS_AS(partition_from_json(broken), ParseError);
}

TEST_CASE("report documents carry their key fields") {
  const Variety s = make_sphere(2);
  const DesignReport r = certify_design(s, 3, oracle::octahedron(), make_quadrature(s, default_quadrature(s, 3, 0)));
  const Json j = design_report_to_json(r);
  CHECK(j.at("t") == 3);
  CHECK(j.at("N") == 6);
  CHECK(j.at("is_design_at_tol") == true);
  CHECK(j.at("lower_bound") == 4);

  MZReport m;
  m.variety = "sphere:1";
  m.t = 4;
  m.N = 8;
  m.multiplier = 2;
  m.A_estimate = 2.0;
  const Json mj = mz_report_to_json(m);
  CHECK(mj.at("N") == 8);
  CHECK(mj.at("A_estimate") == 2.0);
  CHECK(mj.at("kind") == "absolute_value");

  FlowAudit a;
  a.vacuous = true;
  CHECK(flow_audit_to_json(a).at("vacuous") == true);
}
