#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>

#include "CLI11.hpp"

#include "tdesign/certify.hpp"
#include "tdesign/designer.hpp"
#include "tdesign/error.hpp"
#include "tdesign/mzcheck.hpp"
#include "tdesign/partition.hpp"
#include "tdesign/polyspace.hpp"
#include "tdesign/serialize.hpp"
#include "tdesign/variety.hpp"

namespace tdesign::cli {

namespace {

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::string output;
  unsigned threads = 0;
  std::string format = "json";
};

struct RunConfig {
  std::string command;
  std::string variety;
  std::optional<int> t;
  std::optional<int> N;
  std::string N_request;
  std::optional<double> multiplier;
  std::uint64_t seed = 0;
  std::optional<QuadratureDescriptor> quadrature;
  std::string output_dir;
  unsigned threads = 0;
  std::string format;
  Json options = Json::object();

  Json to_json() const {
    Json j;
    j["command"] = command;
    j["variety"] = variety;
    j["t"] = t ? Json(*t) : Json(nullptr);
    j["N"] = N ? Json(*N) : Json(nullptr);
    if (!N_request.empty()) j["N_request"] = N_request;
    j["multiplier"] = multiplier ? Json(*multiplier) : Json(nullptr);
    j["seed"] = seed;
    j["quadrature"] = quadrature ? quadrature_to_json(*quadrature) : Json(nullptr);
    j["output_dir"] = output_dir;
    j["threads"] = threads;
    j["format"] = format;
    j["options"] = options;
    return j;
  }
};

std::string resolve_output_dir(const GlobalFlags& g) {
  if (!g.output.empty()) return g.output;
  if (const char* env = std::getenv("TDESIGN_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

RunConfig base_config(const std::string& command, const std::string& variety, const GlobalFlags& g) {
  RunConfig c;
  c.command = command;
  c.variety = variety;
  c.seed = g.seed;
  c.output_dir = resolve_output_dir(g);
  c.threads = g.threads;
  c.format = g.format;
  return c;
}

std::string write_artifact(const RunConfig& cfg, const std::string& file, Json body) {
  std::filesystem::create_directories(cfg.output_dir);
  Json doc;
  doc["run_config"] = cfg.to_json();
  for (auto& [k, v] : body.items()) doc[k] = std::move(v);
  const std::string path = (std::filesystem::path(cfg.output_dir) / file).string();
  write_json_file(path, doc);
  return path;
}

void check_degree(int t) {
  if (t < 0) throw InputError("t must be non-negative");
}

std::string fmt(double x, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

// --- describe ---------------------------------------------------------------

int cmd_describe(const std::string& spec, int samples, const GlobalFlags& g, std::ostream& out) {
  const Variety v = resolve_variety(spec);
  RunConfig cfg = base_config("describe", spec, g);
  cfg.options["samples"] = samples;
  const SmoothnessReport s = check_smoothness(v, samples, g.seed);
  std::vector<int> degrees;
  for (const auto& p : v.defining()) degrees.push_back(p.degree());

  Json body;
  body["variety"] = variety_to_json(v);
  body["degrees"] = degrees;
  Json sj;
  sj["smooth"] = s.smooth;
  sj["samples"] = s.samples;
  sj["min_normal_singular_value"] = s.min_normal_singular_value;
  sj["max_excess_singular_value"] = s.max_excess_singular_value;
  sj["min_normal_volume"] = s.min_normal_volume;
  sj["max_normal_volume"] = s.max_normal_volume;
  body["smoothness"] = sj;
  const std::string path = write_artifact(cfg, "describe.json", std::move(body));

  out << v.name() << ": n=" << v.ambient_dim() << " d=" << v.intrinsic_dim() << " r=" << v.equation_count()
      << " degrees=[";
  for (std::size_t i = 0; i < degrees.size(); ++i) out << (i ? "," : "") << degrees[i];
  out << "]\n";
  out << "smoothness at " << s.samples << " points: " << (s.smooth ? "ok" : "FAILED")
      << " (min normal singular value " << fmt(s.min_normal_singular_value) << ")\n";
  out << "wrote " << path << "\n";
  return s.smooth ? ok : uncertified;
}

// --- basis ------------------------------------------------------------------

struct BasisFlags {
  std::string quadrature;
  std::size_t samples = 0;
  double rank_tol = 1e-8;
};

std::shared_ptr<const QuadratureRule> basis_rule(const Variety& v, int t, const BasisFlags& f, std::uint64_t seed,
                                                 const BasisOptions& opts) {
  const std::size_t min_nodes = static_cast<std::size_t>(opts.oversampling) * binomial(v.ambient_dim() + t, t);
  QuadratureDescriptor d;
  if (f.quadrature.empty() || f.quadrature == "default") {
    d = default_quadrature(v, t, seed, min_nodes);
  } else {
    const QuadratureKind kind = quadrature_kind_from_string(f.quadrature);
    if (kind == QuadratureKind::monte_carlo) {
      d = monte_carlo_descriptor(v, f.samples ? f.samples : std::max<std::size_t>(min_nodes, 20000), seed, true);
    } else {
      d = default_quadrature(v, t, seed, min_nodes);
      if (d.kind != kind) throw InputError("quadrature '" + f.quadrature + "' is not available on " + v.name());
    }
  }
  if (f.samples && d.kind == QuadratureKind::monte_carlo && f.quadrature.empty()) {
    d = monte_carlo_descriptor(v, f.samples, seed, d.symmetrized);
  }
  return std::make_shared<const QuadratureRule>(make_quadrature(v, d));
}

int cmd_basis(const std::string& spec, int t, const BasisFlags& f, const GlobalFlags& g, std::ostream& out) {
  check_degree(t);
  const Variety v = resolve_variety(spec);
  BasisOptions opts;
  opts.rank_tol = f.rank_tol;
  auto rule = basis_rule(v, t, f, g.seed, opts);
  RunConfig cfg = base_config("basis", spec, g);
  cfg.t = t;
  cfg.quadrature = rule->descriptor;
  cfg.options["rank_tol"] = f.rank_tol;
  const OrthoBasis b = build_ortho_basis(v, t, rule, opts);
  Json body;
  body["basis"] = basis_to_json(b);
  const std::string path = write_artifact(cfg, "basis.json", std::move(body));
  out << b.dim() << "\n";
  for (const auto& w : b.warnings()) out << "warning: " << w << "\n";
  out << "dim P_" << t << "(" << v.name() << ") = " << b.dim() << " using " << rule->size() << " "
      << to_string(rule->kind()) << " nodes; wrote " << path << "\n";
  return ok;
}

// --- partition --------------------------------------------------------------

int cmd_partition(const std::string& spec, int N, std::size_t sample_size, const GlobalFlags& g, std::ostream& out) {
  if (N < 1) throw InputError("N must be positive");
  const Variety v = resolve_variety(spec);
  if (sample_size == 0) sample_size = 100 * static_cast<std::size_t>(N);
  RunConfig cfg = base_config("partition", spec, g);
  cfg.N = N;
  cfg.options["sample_size"] = sample_size;
  const Partition p = area_regular_partition(v, N, sample_size, g.seed);
  const SandwichReport s = ball_sandwich_check(p, v);
  Json body;
  body["partition"] = partition_to_json(p, s);
  const std::string path = write_artifact(cfg, "partition.json", std::move(body));
  out << "norm_R " << fmt(p.norm_R, 10) << "\n";
  out << "c1_hat " << fmt(s.c1_hat, 10) << "\n";
  out << "c2_hat " << fmt(s.c2_hat, 10) << "\n";
  for (const auto& w : p.warnings) out << "warning: " << w << "\n";
  out << N << " regions from " << sample_size << " samples, " << p.iterations << " iterations; wrote " << path
      << "\n";
  return ok;
}

// --- mz ---------------------------------------------------------------------

struct MZFlags {
  std::vector<int> t_list;
  std::vector<double> multipliers;
  int trials = 20;
  int pick_draws = 1;
  std::size_t dense_nodes = 1'000'000;
  bool gradient = false;
  bool extremal = false;
};

int cmd_mz(const std::string& spec, const MZFlags& f, const GlobalFlags& g, std::ostream& out) {
  if (f.t_list.empty()) throw InputError("mz needs at least one degree");
  for (int t : f.t_list) check_degree(t);
  if (f.trials < 1) throw InputError("trials must be positive");
  const Variety v = resolve_variety(spec);
  const std::vector<double> mults = f.multipliers.empty() ? default_multipliers() : f.multipliers;
  for (double c : mults) {
    if (!(c > 0)) throw InputError("multipliers must be positive");
  }
  MZSweepOptions opts;
  opts.kind = f.gradient ? MZKind::gradient : MZKind::absolute_value;
  opts.pick_draws = f.pick_draws;
  opts.dense_nodes = f.dense_nodes;
  opts.extremal_picks = f.extremal;
  RunConfig cfg = base_config("mz", spec, g);
  cfg.options["t"] = f.t_list;
  cfg.options["multipliers"] = mults;
  cfg.options["trials"] = f.trials;
  cfg.options["pick_draws"] = f.pick_draws;
  cfg.options["dense_nodes"] = f.dense_nodes;
  cfg.options["kind"] = to_string(opts.kind);
  cfg.options["extremal_picks"] = f.extremal;

  const auto reports = mz_sweep(v, f.t_list, mults, f.trials, g.seed, opts);
  Json rows = Json::array();
  for (const auto& r : reports) rows.push_back(mz_report_to_json(r));
  Json est = Json::array();
  out << std::left << std::setw(4) << "t" << std::setw(8) << "c" << std::setw(8) << "N" << std::setw(12) << "low"
      << std::setw(12) << "high" << std::setw(6) << "viol" << "inconcl\n";
  for (const auto& r : reports) {
    out << std::left << std::setw(4) << r.t << std::setw(8) << r.multiplier << std::setw(8) << r.N << std::setw(12)
        << fmt(r.worst_ratio_low) << std::setw(12) << fmt(r.worst_ratio_high) << std::setw(6) << r.violations
        << r.inconclusive << "\n";
  }
  for (int t : f.t_list) {
    Json e;
    e["t"] = t;
    if (f.gradient) {
      const auto K = k_estimate(reports, t, 0.0);
      e["K_estimate"] = K ? Json(*K) : Json(nullptr);
      out << "t=" << t << " K_estimate " << (K ? fmt(*K) : "n/a") << "\n";
    } else {
      const auto A = a_estimate(reports, t);
      const auto K = k_estimate(reports, t, A.value_or(mults.back()));
      e["A_estimate"] = A ? Json(*A) : Json(nullptr);
      e["K_estimate"] = K ? Json(*K) : Json(nullptr);
      out << "t=" << t << " A_estimate " << (A ? fmt(*A) : "none") << " K_estimate " << (K ? fmt(*K) : "n/a")
          << "\n";
    }
    est.push_back(std::move(e));
  }
  Json body;
  body["reports"] = std::move(rows);
  body["estimates"] = std::move(est);
  const std::string path = write_artifact(cfg, f.gradient ? "mz_gradient.json" : "mz.json", std::move(body));
  out << "wrote " << path << "\n";
  return ok;
}

// --- construct --------------------------------------------------------------

struct ConstructFlags {
  std::string N = "auto";
  std::optional<double> multiplier;
  double tol = 1e-8;
  double potential_tol = 1e-20;
  int max_iter = 2000;
  std::string method = "lm";
};

int parse_N(const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    if (v < 1 || v > 10'000'000) throw InputError("N must be positive");
    return static_cast<int>(v);
  } catch (const std::logic_error&) {
    throw InputError("N must be a positive integer or 'auto', got '" + s + "'");
  }
}

void write_points(const RunConfig& cfg, const std::string& stem, const PointConfig& X) {
  std::filesystem::create_directories(cfg.output_dir);
  const auto base = std::filesystem::path(cfg.output_dir) / stem;
  if (cfg.format == "csv") {
    std::ofstream o(base.string() + ".csv");
    if (!o) throw InputError("cannot write '" + base.string() + ".csv'");
    o << points_to_csv(X);
  } else {
    write_json_file(base.string() + ".json", points_to_json(X));
  }
}

int cmd_construct(const std::string& spec, int t, const ConstructFlags& f, const GlobalFlags& g, std::ostream& out) {
  check_degree(t);
  const Variety v = resolve_variety(spec);
  DesignOptions dopts;
  dopts.tol = f.potential_tol;
  dopts.polish_tol = std::min(dopts.polish_tol, f.potential_tol);
  dopts.max_iter = f.max_iter;
  dopts.method = descent_method_from_string(f.method);
  dopts.seed = g.seed;

  RunConfig cfg = base_config("construct", spec, g);
  cfg.t = t;
  cfg.N_request = f.N;
  cfg.multiplier = f.multiplier;
  cfg.options["tol"] = f.tol;
  cfg.options["potential_tol"] = f.potential_tol;
  cfg.options["max_iter"] = f.max_iter;
  cfg.options["method"] = to_string(dopts.method);

  int N = 0;
  const bool automatic = f.N == "auto";
  if (!automatic) N = parse_N(f.N);
  if (f.multiplier && !(*f.multiplier > 0)) throw InputError("auto N needs a positive multiplier");
  if (automatic && t < 1) throw InputError("auto N needs t >= 1");

  auto basis = std::make_shared<const OrthoBasis>(build_default_basis(v, t, g.seed));
  cfg.quadrature = basis->quadrature().descriptor;
  if (automatic) N = auto_design_size(t, v.intrinsic_dim(), basis->dim(), f.multiplier);
  cfg.N = N;
  const ZeroMeanBasis zb(basis);

  CertifyOptions copts;
  copts.tol = f.tol;
  copts.seed = g.seed;
  copts.known_lower_bound = lower_bound(v, t, g.seed);

  const PointConfig init = partition_init(v, N, g.seed);
  const DesignRun run = construct_design(zb, init, dopts, copts.known_lower_bound);
  // The basis rule doubles as the reference when the variety has no exact moments.
  DesignReport report = certify_design(v, t, run.final, basis->quadrature(), copts);
  report.normalized_potential = run.final_normalized_potential;

  Json body;
  body["report"] = design_report_to_json(report);
  body["run"] = design_run_to_json(run);
  const std::string path = write_artifact(cfg, "design.json", std::move(body));
  write_points(cfg, "design_points", run.final);

  for (const auto& w : run.warnings) out << "warning: " << w << "\n";
  out << v.name() << " t=" << t << " N=" << N << ": " << (report.is_design_at_tol ? "certified" : "NOT certified")
      << "\n";
  out << "  normalized potential " << fmt(run.final_normalized_potential) << " after " << run.iterations
      << " iterations\n";
  out << "  worst monomial error " << fmt(report.worst_monomial_error) << " (tolerance " << fmt(report.tolerance)
      << ")\n";
  out << "  lower bound " << report.lower_bound << "\n";
  out << "wrote " << path << "\n";
  return report.is_design_at_tol ? ok : uncertified;
}

// --- certify ----------------------------------------------------------------

struct CertifyFlags {
  std::string points;
  double tol = 1e-8;
  std::size_t samples = 0;
};

int cmd_certify(const std::string& spec, int t, const CertifyFlags& f, const GlobalFlags& g, std::ostream& out) {
  check_degree(t);
  const Variety v = resolve_variety(spec);
  const PointConfig X = load_points(f.points, g.format);
  if (X.ambient_dim() != v.ambient_dim()) throw InputError("point dimension does not match the variety");
  RunConfig cfg = base_config("certify", spec, g);
  cfg.t = t;
  cfg.N = static_cast<int>(X.size());
  cfg.options["points"] = f.points;
  cfg.options["tol"] = f.tol;

  QuadratureRule rule;
  if (!v.has_exact_moments()) {
    QuadratureDescriptor d = default_quadrature(v, (t + 1) / 2, g.seed);
    if (f.samples) d = monte_carlo_descriptor(v, f.samples, g.seed, true);
    rule = make_quadrature(v, d);
    cfg.quadrature = d;
  }
  cfg.options["reference_samples"] = f.samples;
  CertifyOptions copts;
  copts.tol = f.tol;
  copts.seed = g.seed;
  DesignReport report = certify_design(v, t, X, rule, copts);

  Json tight = nullptr;
  if (t % 2 == 0) {
    const OrthoBasis half = build_default_basis(v, t / 2, g.seed);
    const TightReport tr = tight_check(half, t, X);
    report.tight = tr.tight && report.is_design_at_tol;
    report.kernel_diagonal = tr.diagonal;
    tight = Json::object();
    tight["tight"] = tr.tight;
    tight["dimension_match"] = tr.dimension_match;
    tight["max_relative_deviation"] = tr.max_relative_deviation;
  }
  Json body;
  body["report"] = design_report_to_json(report);
  body["tight_check"] = std::move(tight);
  const std::string path = write_artifact(cfg, "certify.json", std::move(body));

  out << v.name() << " t=" << t << " N=" << X.size() << ": " << (report.is_design_at_tol ? "PASS" : "FAIL") << "\n";
  out << "  worst monomial error " << std::setprecision(17) << report.worst_monomial_error << std::setprecision(6)
      << " at alpha=(";
  for (std::size_t i = 0; i < report.worst_alpha.size(); ++i) out << (i ? "," : "") << report.worst_alpha[i];
  out << ") tolerance " << fmt(report.tolerance) << "\n";
  out << "  lower bound " << report.lower_bound << (report.meets_lower_bound ? "" : " (not met)")
      << (report.tight ? ", tight" : "") << "\n";
  for (const auto& n : report.notes) out << "  note: " << n << "\n";
  out << "wrote " << path << "\n";
  return report.is_design_at_tol ? ok : uncertified;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polynomial designs on algebraic manifolds"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--output", g.output, "artifact directory (default $TDESIGN_OUTPUT_DIR or .)");
  app.add_option("--threads", g.threads, "worker cap (0 = hardware)");
  app.add_option("--format", g.format, "point file format")->check(CLI::IsMember({"json", "csv"}));

  std::string variety;
  int t = 0;

  int samples = 100;
  auto* describe = app.add_subcommand("describe", "summarize a variety and check smoothness");
  describe->add_option("variety", variety)->required();
  describe->add_option("--samples", samples)->check(CLI::PositiveNumber);

  BasisFlags bf;
  auto* basis = app.add_subcommand("basis", "build an orthonormal basis of P_t");
  basis->add_option("variety", variety)->required();
  basis->add_option("-t,--degree", t)->required();
  basis->add_option("--quadrature", bf.quadrature, "default, exact_moments, parametric or monte_carlo");
  basis->add_option("--samples", bf.samples, "Monte Carlo node count");
  basis->add_option("--rank-tol", bf.rank_tol)->check(CLI::PositiveNumber);

  int N = 0;
  std::size_t sample_size = 0;
  auto* partition = app.add_subcommand("partition", "area-regular partition");
  partition->add_option("variety", variety)->required();
  partition->add_option("-N,--points", N)->required();
  partition->add_option("--sample-size", sample_size, "default 100 N");

  MZFlags mf;
  auto* mz = app.add_subcommand("mz", "Marcinkiewicz-Zygmund sweep");
  mz->add_option("variety", variety)->required();
  mz->add_option("-t,--degree", mf.t_list)->required();
  mz->add_option("--multipliers", mf.multipliers);
  mz->add_option("--trials", mf.trials);
  mz->add_option("--pick-draws", mf.pick_draws)->check(CLI::PositiveNumber);
  mz->add_option("--dense-nodes", mf.dense_nodes);
  mz->add_flag("--gradient", mf.gradient, "use |grad_t P|");
  mz->add_flag("--extremal", mf.extremal, "per-region min and max picks instead of random ones");

  ConstructFlags cf;
  auto* construct = app.add_subcommand("construct", "construct and certify a t-design");
  construct->add_option("variety", variety)->required();
  construct->add_option("-t,--degree", t)->required();
  construct->add_option("-N,--points", cf.N, "integer or auto");
  construct->add_option("--multiplier", cf.multiplier, "c in N = ceil(c t^d) for auto N");
  construct->add_option("--tol", cf.tol, "monomial tolerance");
  construct->add_option("--potential-tol", cf.potential_tol);
  construct->add_option("--max-iter", cf.max_iter);
  construct->add_option("--method", cf.method, "lm or steepest");

  CertifyFlags xf;
  auto* certify = app.add_subcommand("certify", "certify a point set");
  certify->add_option("variety", variety)->required();
  certify->add_option("-t,--degree", t)->required();
  certify->add_option("--points", xf.points)->required();
  certify->add_option("--tol", xf.tol);
  certify->add_option("--samples", xf.samples, "Monte Carlo reference nodes");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : input_error;
  }

  try {
    set_thread_limit(g.threads);
    if (*describe) return cmd_describe(variety, samples, g, out);
    if (*basis) return cmd_basis(variety, t, bf, g, out);
    if (*partition) return cmd_partition(variety, N, sample_size, g, out);
    if (*mz) return cmd_mz(variety, mf, g, out);
    if (*construct) return cmd_construct(variety, t, cf, g, out);
    if (*certify) return cmd_certify(variety, t, xf, g, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return input_error;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return numerical_error;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return input_error;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return numerical_error;
  }
  return input_error;
}

}  // namespace tdesign::cli
