#include "tdesign/serialize.hpp"

#include <fstream>
#include <sstream>

#include "tdesign/error.hpp"

namespace tdesign {

namespace {

Json matrix_rows(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from(const Json& j) {
  if (!j.is_array()) throw ParseError("expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError("expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

template <typename T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(std::string("field '") + key + "' has the wrong type");
  }
}

std::string builtin_spec(const Variety& v) {
  std::ostringstream s;
  s.precision(17);
  switch (v.kind()) {
    case VarietyKind::sphere:
      s << "sphere:" << static_cast<int>(v.params()[0]);
      break;
    case VarietyKind::torus:
      s << "torus:" << v.params()[0] << "," << v.params()[1];
      break;
    case VarietyKind::grassmannian:
      s << "grassmann:" << static_cast<int>(v.params()[0]) << "," << static_cast<int>(v.params()[1]);
      break;
    case VarietyKind::custom:
      break;
  }
  return s.str();
}

}  // namespace

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) throw InputError("failed writing '" + path + "'");
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
}

Json variety_to_json(const Variety& v) {
  Json j;
  j["name"] = v.name();
  j["ambient_dim"] = v.ambient_dim();
  j["intrinsic_dim"] = v.intrinsic_dim();
  if (v.kind() != VarietyKind::custom) j["builtin"] = builtin_spec(v);
  if (v.degree_hint()) j["degree_hint"] = *v.degree_hint();
  Json polys = Json::array();
  for (const MultiPoly& p : v.defining()) {
    Json terms = Json::array();
    for (const auto& [e, c] : p.terms()) terms.push_back(Json::array({e, c}));
    polys.push_back(std::move(terms));
  }
  j["polys"] = std::move(polys);
  return j;
}

static Variety variety_from_json_unchecked(const Json& j) {
  if (!j.is_object()) throw ParseError("variety document must be an object");
  if (j.contains("builtin")) return resolve_variety(field<std::string>(j, "builtin"));
  const auto name = field<std::string>(j, "name");
  const int n = field<int>(j, "ambient_dim");
  const int d = field<int>(j, "intrinsic_dim");
  if (n < 1 || d < 0 || d >= n) throw InputError("variety needs 0 <= intrinsic_dim < ambient_dim");
  if (!j.contains("polys") || !j["polys"].is_array()) throw ParseError("missing field 'polys'");
  std::vector<MultiPoly> polys;
  for (const Json& pj : j["polys"]) {
    if (!pj.is_array()) throw ParseError("each polynomial must be a list of terms");
    MultiPoly p(n);
    for (const Json& term : pj) {
      if (!term.is_array() || term.size() != 2 || !term[0].is_array() || !term[1].is_number()) {
        throw ParseError("each term must be [[exponents...], coefficient]");
      }
      Exponent e;
      for (const Json& k : term[0]) {
        if (!k.is_number_integer()) throw ParseError("exponents must be integers");
        e.push_back(k.get<int>());
      }
      p.add_term(e, term[1].get<double>());
    }
    polys.push_back(std::move(p));
  }
  std::optional<int> hint;
  if (j.contains("degree_hint")) hint = field<int>(j, "degree_hint");
  return make_custom_variety(name, n, d, std::move(polys), hint);
}

Variety load_variety_json(const std::string& path) { return variety_from_json(read_json_file(path)); }

Json points_to_json(const PointConfig& X) { return matrix_rows(X.coords.transpose()); }

static PointConfig points_from_json_unchecked(const Json& j) {
  if (j.is_object() && j.contains("points")) return points_from_json(j["points"]);
  if (!j.is_array() || j.empty()) throw ParseError("point set must be a non-empty array of coordinate arrays");
  const std::size_t n = j[0].is_array() ? j[0].size() : 0;
  if (n == 0) throw ParseError("point set must be a non-empty array of coordinate arrays");
  PointConfig X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != n) throw ParseError("all points must have the same dimension");
    X.coords.col(static_cast<Eigen::Index>(i)) = vector_from(j[i]);
  }
  return X;
}

PointConfig points_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("malformed CSV value '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("CSV rows have different lengths");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw ParseError("CSV point file is empty");
  PointConfig X(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < rows[i].size(); ++k) X.coords(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = rows[i][k];
  }
  return X;
}

std::string points_to_csv(const PointConfig& X) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < X.size(); ++i) {
    for (Eigen::Index k = 0; k < X.ambient_dim(); ++k) out << (k ? "," : "") << X.coords(k, i);
    out << "\n";
  }
  return out.str();
}

PointConfig load_points(const std::string& path, const std::string& format) {
  if (format == "json") return points_from_json(read_json_file(path));
  if (format == "csv") {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return points_from_csv(buf.str());
  }
  throw InputError("unknown point format '" + format + "'");
}

Json quadrature_to_json(const QuadratureDescriptor& q) {
  Json j;
  j["kind"] = to_string(q.kind);
  j["degree"] = q.degree;
  j["samples"] = q.samples;
  j["seed"] = q.seed;
  j["symmetrized"] = q.symmetrized;
  return j;
}

static QuadratureDescriptor quadrature_from_json_unchecked(const Json& j) {
  QuadratureDescriptor q;
  q.kind = quadrature_kind_from_string(field<std::string>(j, "kind"));
  q.degree = field<int>(j, "degree");
  q.samples = field<std::size_t>(j, "samples");
  q.seed = field<std::uint64_t>(j, "seed");
  q.symmetrized = field<bool>(j, "symmetrized");
  return q;
}

Json basis_to_json(const OrthoBasis& b) {
  Json j;
  j["variety"] = variety_to_json(b.variety());
  j["t"] = b.degree();
  j["dim"] = b.dim();
  j["monomials"] = b.frame().size();
  Json flat = Json::array();
  for (Eigen::Index r = 0; r < b.coeffs().rows(); ++r) {
    for (Eigen::Index c = 0; c < b.coeffs().cols(); ++c) flat.push_back(b.coeffs()(r, c));
  }
  j["coeffs"] = std::move(flat);
  j["quadrature"] = quadrature_to_json(b.quadrature().descriptor);
  j["quadrature_nodes"] = b.quadrature().size();
  j["rank_tol"] = b.rank_tol();
  j["singular_values"] = b.singular_values();
  j["warnings"] = b.warnings();
  return j;
}

static OrthoBasis basis_from_json_unchecked(const Json& j) {
  Variety v = variety_from_json(j.at("variety"));
  const int t = field<int>(j, "t");
  const int dim = field<int>(j, "dim");
  const int mono = field<int>(j, "monomials");
  const Eigen::VectorXd flat = vector_from(j.at("coeffs"));
  if (flat.size() != static_cast<Eigen::Index>(dim) * mono) throw ParseError("basis coefficient count mismatch");
  Eigen::MatrixXd coeffs(dim, mono);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < mono; ++c) coeffs(r, c) = flat[static_cast<Eigen::Index>(r) * mono + c];
  }
  auto rule = std::make_shared<const QuadratureRule>(make_quadrature(v, quadrature_from_json(j.at("quadrature"))));
  return OrthoBasis(std::move(v), t, std::move(coeffs), std::move(rule), field<double>(j, "rank_tol"),
                    field<std::vector<double>>(j, "singular_values"), field<std::vector<std::string>>(j, "warnings"));
}

Json partition_to_json(const Partition& p, const SandwichReport& s) {
  Json j;
  j["variety"] = p.variety;
  j["N"] = p.N;
  j["seed"] = p.seed;
  j["sample_size"] = p.sample.size();
  j["norm_R"] = p.norm_R;
  j["c1_hat"] = s.c1_hat;
  j["c2_hat"] = s.c2_hat;
  j["iterations"] = p.iterations;
  j["converged"] = p.converged;
  j["warnings"] = p.warnings;
  j["centers"] = points_to_json(p.centers);
  j["region_measure"] = vector_json(p.region_measure);
  j["region_diameter"] = vector_json(p.region_diameter);
  j["assignment"] = p.assignment;
  j["sample"] = points_to_json(p.sample);
  return j;
}

static Partition partition_from_json_unchecked(const Json& j) {
  Partition p;
  p.variety = field<std::string>(j, "variety");
  p.N = field<int>(j, "N");
  p.seed = field<std::uint64_t>(j, "seed");
  p.norm_R = field<double>(j, "norm_R");
  p.iterations = field<int>(j, "iterations");
  p.converged = field<bool>(j, "converged");
  p.warnings = field<std::vector<std::string>>(j, "warnings");
  p.centers = points_from_json(j.at("centers"));
  p.region_measure = vector_from(j.at("region_measure"));
  p.region_diameter = vector_from(j.at("region_diameter"));
  p.assignment = field<std::vector<int>>(j, "assignment");
  p.sample = points_from_json(j.at("sample"));
  if (static_cast<Eigen::Index>(p.assignment.size()) != p.sample.size()) throw ParseError("assignment length mismatch");
  return p;
}

Json mz_report_to_json(const MZReport& r) {
  Json j;
  j["variety"] = r.variety;
  j["kind"] = to_string(r.kind);
  j["t"] = r.t;
  j["N"] = r.N;
  j["multiplier"] = r.multiplier;
  j["trials"] = r.trials;
  j["pick_draws"] = r.pick_draws;
  j["extremal_picks"] = r.extremal_picks;
  j["worst_ratio_low"] = r.worst_ratio_low;
  j["worst_ratio_high"] = r.worst_ratio_high;
  j["violations"] = r.violations;
  j["inconclusive"] = r.inconclusive;
  j["A_estimate"] = r.A_estimate ? Json(*r.A_estimate) : Json(nullptr);
  j["K_estimate"] = r.K_estimate ? Json(*r.K_estimate) : Json(nullptr);
  if (r.vector_bound_ok) j["vector_bound_ok"] = *r.vector_bound_ok;
  return j;
}

Json design_report_to_json(const DesignReport& r) {
  Json j;
  j["variety"] = r.variety;
  j["t"] = r.t;
  j["N"] = r.N;
  j["worst_monomial_error"] = r.worst_monomial_error;
  j["worst_alpha"] = r.worst_alpha;
  j["worst_standard_error"] = r.worst_standard_error;
  j["tolerance"] = r.tolerance;
  j["normalized_potential"] = r.normalized_potential ? Json(*r.normalized_potential) : Json(nullptr);
  j["is_design_at_tol"] = r.is_design_at_tol;
  j["lower_bound"] = r.lower_bound;
  j["meets_lower_bound"] = r.meets_lower_bound;
  j["tight"] = r.tight;
  j["kernel_diagonal"] = r.kernel_diagonal ? Json(*r.kernel_diagonal) : Json(nullptr);
  j["newton_energy"] = r.newton_energy ? Json(*r.newton_energy) : Json(nullptr);
  j["quadrature_kind"] = to_string(r.quadrature_kind);
  j["exact_reference"] = r.exact_reference;
  j["notes"] = r.notes;
  return j;
}

Json design_run_to_json(const DesignRun& r) {
  Json j;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["final_potential"] = r.final_potential;
  j["final_normalized_potential"] = r.final_normalized_potential;
  j["gradient_norm"] = r.gradient_norm;
  j["potential_history"] = r.potential_history;
  Json o;
  o["tol"] = r.options.tol;
  o["polish_tol"] = r.options.polish_tol;
  o["max_iter"] = r.options.max_iter;
  o["method"] = to_string(r.options.method);
  o["armijo_factor"] = r.options.armijo_factor;
  o["armijo_c"] = r.options.armijo_c;
  o["seed"] = r.options.seed;
  j["options"] = std::move(o);
  j["warnings"] = r.warnings;
  j["initial"] = points_to_json(r.initial);
  j["final"] = points_to_json(r.final);
  return j;
}

Json flow_audit_to_json(const FlowAudit& a) {
  Json j;
  j["degenerate"] = a.degenerate;
  j["initial_mean"] = a.initial_mean;
  j["final_mean"] = a.final_mean;
  j["splitting_lhs"] = a.splitting_lhs;
  j["splitting_rhs"] = a.splitting_rhs;
  j["min_derivative"] = a.min_derivative;
  j["derivative_bound"] = a.derivative_bound;
  j["vacuous"] = a.vacuous;
  j["splitting_held"] = a.splitting_held;
  j["derivative_held"] = a.derivative_held;
  j["increased"] = a.increased;
  j["positive"] = a.positive;
  j["passed"] = a.passed;
  j["steps"] = a.steps;
  return j;
}

namespace {

// Type and key errors from the JSON library surface as ParseError.
template <typename F>
auto parse_guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
}

}  // namespace

Variety variety_from_json(const Json& j) { return parse_guarded([&] { return variety_from_json_unchecked(j); }); }

PointConfig points_from_json(const Json& j) { return parse_guarded([&] { return points_from_json_unchecked(j); }); }

QuadratureDescriptor quadrature_from_json(const Json& j) { return parse_guarded([&] { return quadrature_from_json_unchecked(j); }); }

OrthoBasis basis_from_json(const Json& j) { return parse_guarded([&] { return basis_from_json_unchecked(j); }); }

Partition partition_from_json(const Json& j) { return parse_guarded([&] { return partition_from_json_unchecked(j); }); }

}  // namespace tdesign
