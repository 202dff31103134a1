#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "tdesign/error.hpp"
#include "tdesign/serialize.hpp"
#include "tdesign/variety.hpp"

namespace tdesign {

namespace {

constexpr std::size_t kMaxStoredSymmetries = 400;

// (k-1)!! for even k >= 0, i.e. 1*3*5*...*(k-1).
double odd_double_factorial(int k) {
  double v = 1.0;
  for (int j = k - 1; j > 1; j -= 2) v *= j;
  return v;
}

// Mean of cos^a(u) sin^b(u) over a period.
double trig_mean(int a, int b) {
  if (a % 2 != 0 || b % 2 != 0) return 0.0;
  double num = odd_double_factorial(a) * odd_double_factorial(b);
  double den = 1.0;
  for (int j = a + b; j > 1; j -= 2) den *= j;
  return num / den;
}

double sphere_moment(const Exponent& alpha) {
  const int n = static_cast<int>(alpha.size());
  int total = 0;
  double num = 1.0;
  for (int a : alpha) {
    if (a % 2 != 0) return 0.0;
    num *= odd_double_factorial(a);
    total += a;
  }
  double den = 1.0;
  for (int j = 0; j < total / 2; ++j) den *= n + 2 * j;
  return num / den;
}

std::vector<std::pair<std::vector<int>, std::vector<int>>> signed_permutations(int n,
                                                                               bool fix_first_sign) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  const int sign_bits = fix_first_sign ? n - 1 : n;
  do {
    for (int mask = 0; mask < (1 << sign_bits); ++mask) {
      std::vector<int> signs(static_cast<std::size_t>(n), 1);
      for (int b = 0; b < sign_bits; ++b) {
        const int idx = fix_first_sign ? b + 1 : b;
        if (mask & (1 << b)) signs[static_cast<std::size_t>(idx)] = -1;
      }
      out.emplace_back(perm, signs);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::size_t signed_permutation_count(int n, bool fix_first_sign) {
  std::size_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<std::size_t>(i);
  return f << (fix_first_sign ? n - 1 : n);
}

PointConfig gaussian_sphere_sampler(const Variety& v, std::size_t count, std::uint64_t seed) {
  auto rng = make_rng(seed, {0x5e11});
  std::normal_distribution<double> g;
  const int n = v.ambient_dim();
  PointConfig out(n, static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXd x(n);
    do {
      for (int k = 0; k < n; ++k) x[k] = g(rng);
    } while (x.norm() == 0.0);
    out.coords.col(static_cast<Eigen::Index>(i)) = x / x.norm();
  }
  return out;
}

double sphere_angle(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return 2.0 * std::atan2((x - y).norm(), (x + y).norm());
}

// --- torus ---

Eigen::VectorXd torus_point(double R, double r, double u, double v) {
  Eigen::VectorXd x(3);
  x << (R + r * std::cos(v)) * std::cos(u), (R + r * std::cos(v)) * std::sin(u), r * std::sin(v);
  return x;
}

double torus_moment(double R, double r, const Exponent& alpha) {
  const int a = alpha[0], b = alpha[1], c = alpha[2];
  const double u_part = trig_mean(a, b);
  if (u_part == 0.0) return 0.0;
  const int k = a + b + 1;
  double v_part = 0.0;
  for (int j = 0; j <= k; ++j) {
    v_part += static_cast<double>(binomial(k, j)) * std::pow(R, k - j) * std::pow(r, j) *
              trig_mean(j, c);
  }
  return u_part * std::pow(r, c) * v_part / R;
}

// --- Grassmannian ---

double grassmann_scale(int i, int j) {
  return i == j ? 1.0 : std::numbers::sqrt2;
}

std::vector<MultiPoly> grassmann_equations(int k, int n) {
  const int dim = n * (n + 1) / 2;
  auto entry = [&](int i, int j) {
    // P_ij as a polynomial in the scaled coordinates.
    MultiPoly p = MultiPoly::variable(dim, grassmann_coordinate(i, j, n));
    return p * (1.0 / grassmann_scale(i, j));
  };
  std::vector<MultiPoly> eqs;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      MultiPoly sq(dim);
      for (int l = 0; l < n; ++l) sq += entry(i, l) * entry(l, j);
      eqs.push_back((sq - entry(i, j)) * grassmann_scale(i, j));
    }
  }
  MultiPoly trace = MultiPoly::constant(dim, -static_cast<double>(k));
  for (int i = 0; i < n; ++i) trace += entry(i, i);
  eqs.push_back(trace);
  return eqs;
}

Eigen::VectorXd grassmann_round(const Eigen::VectorXd& coords, int k, int n) {
  const Eigen::MatrixXd S = grassmann_matrix(coords, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::MatrixXd V = es.eigenvectors().rightCols(k);
  return grassmann_coords(V * V.transpose());
}

double grassmann_geodesic(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int k, int n) {
  const Eigen::MatrixXd A = grassmann_matrix(x, n);
  const Eigen::MatrixXd B = grassmann_matrix(y, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(A), eb(B);
  const Eigen::MatrixXd U = ea.eigenvectors().rightCols(k);
  const Eigen::MatrixXd W = eb.eigenvectors().rightCols(k);
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(U.transpose() * W).singularValues();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double th = std::acos(std::clamp(s[i], -1.0, 1.0));
    sum += th * th;
  }
  // |dP|_F = sqrt(2) |d theta| along principal-angle geodesics.
  return std::numbers::sqrt2 * std::sqrt(sum);
}

// --- constrained random walk on M (reversible, targets the Hausdorff measure) ---

struct ChainState {
  Eigen::VectorXd x;
  Eigen::MatrixXd tangent;  // n x d
  Eigen::MatrixXd normal;   // n x (n-d)
};

ChainState chain_state(const Variety& v, const Eigen::VectorXd& x) {
  const NormalBasis nb = normal_basis(v, x);
  const Eigen::Index n = x.size();
  const int k = v.codim();
  Eigen::MatrixXd U(n, k);
  for (int i = 0; i < k; ++i) U.col(i) = nb.vectors[static_cast<std::size_t>(i)].normalized();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(U);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return ChainState{x, Q.rightCols(n - k), Q.leftCols(k)};
}

// Solve p(z + N a) = 0 for a by Gauss-Newton, starting at a = 0.
std::optional<Eigen::VectorXd> normal_solve(const Variety& v, const Eigen::VectorXd& z,
                                            const Eigen::MatrixXd& N) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(N.cols());
  for (int iter = 0; iter < 30; ++iter) {
    const Eigen::VectorXd y = z + N * a;
    const Eigen::VectorXd r = v.residuals(y);
    if (!std::isfinite(r.norm())) return std::nullopt;
    if (r.cwiseAbs().maxCoeff() <= v.tolerance_at(y)) return y;
    const Eigen::MatrixXd JN = v.jacobian(y) * N;
    a -= JN.completeOrthogonalDecomposition().solve(r);
  }
  return std::nullopt;
}

Eigen::VectorXd find_start(const Variety& v, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ProjectionOptions opts;
  opts.use_fast_path = false;
  opts.closest_point = false;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::VectorXd z(v.ambient_dim());
    for (int k = 0; k < v.ambient_dim(); ++k) z[k] = g(rng);
    try {
      Point p = project_to_variety(v, z, opts);
      normal_basis(v, p.coords);
      return p.coords;
    } catch (const NumericalError&) {
    }
  }
  throw RetractionError("could not find a starting point on '" + v.name() + "'");
}

PointConfig manifold_mcmc_sampler(const Variety& v, std::size_t count, std::uint64_t seed) {
  auto rng = make_rng(seed, {0x3c3c});
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int d = v.intrinsic_dim();
  constexpr int kBurnIn = 2000;
  constexpr int kThin = 10;

  ChainState state = chain_state(v, find_start(v, rng));
  double sigma = 0.25 * std::max(1.0, state.x.norm());
  int window_accept = 0, window_total = 0;

  auto step = [&](bool adapt) {
    Eigen::VectorXd dv(d);
    for (int k = 0; k < d; ++k) dv[k] = sigma * g(rng);
    bool accepted = false;
    if (auto y = normal_solve(v, state.x + state.tangent * dv, state.normal)) {
      try {
        ChainState next = chain_state(v, *y);
        const Eigen::VectorXd back = next.tangent.transpose() * (state.x - *y);
        auto xr = normal_solve(v, *y + next.tangent * back, next.normal);
        if (xr && (*xr - state.x).norm() <= 1e-8 * (1.0 + state.x.norm())) {
          const double log_ratio = (dv.squaredNorm() - back.squaredNorm()) / (2.0 * sigma * sigma);
          if (std::log(unif(rng)) < log_ratio) {
            state = std::move(next);
            accepted = true;
          }
        }
      } catch (const NumericalError&) {
      }
    }
    if (adapt) {
      window_accept += accepted ? 1 : 0;
      if (++window_total == 100) {
        const double rate = window_accept / 100.0;
        if (rate < 0.25) sigma *= 0.7;
        if (rate > 0.5) sigma *= 1.3;
        window_accept = window_total = 0;
      }
    }
  };

  for (int i = 0; i < kBurnIn; ++i) step(true);
  PointConfig out(v.ambient_dim(), static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    for (int j = 0; j < kThin; ++j) step(false);
    out.coords.col(static_cast<Eigen::Index>(i)) = state.x;
  }
  return out;
}

}  // namespace

// --- Grassmannian coordinate helpers ----------------------------------------

int grassmann_coordinate(int i, int j, int n) {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle.
  return i * n - i * (i - 1) / 2 + (j - i);
}

Eigen::MatrixXd grassmann_matrix(const Eigen::VectorXd& coords, int n) {
  Eigen::MatrixXd P(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = coords[grassmann_coordinate(i, j, n)] / grassmann_scale(i, j);
      P(i, j) = v;
      P(j, i) = v;
    }
  }
  return P;
}

Eigen::VectorXd grassmann_coords(const Eigen::MatrixXd& matrix) {
  const int n = static_cast<int>(matrix.rows());
  Eigen::VectorXd c(n * (n + 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      c[grassmann_coordinate(i, j, n)] = 0.5 * (matrix(i, j) + matrix(j, i)) * grassmann_scale(i, j);
    }
  }
  return c;
}

// --- builders ---------------------------------------------------------------

Variety make_sphere(int d) {
  if (d < 1) throw InputError("sphere dimension must be >= 1");
  const int n = d + 1;
  Variety::Definition def;
  def.name = "sphere:" + std::to_string(d);
  def.ambient_dim = n;
  def.intrinsic_dim = d;
  def.kind = VarietyKind::sphere;
  def.params = {static_cast<double>(d)};
  def.degree_hint = 2;
  MultiPoly p = MultiPoly::constant(n, -1.0);
  for (int k = 0; k < n; ++k) {
    Exponent e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(k)] = 2;
    p.add_term(e, 1.0);
  }
  def.defining = {p};
  def.sampler = gaussian_sphere_sampler;
  def.exact_moment = sphere_moment;
  def.fast_projection = [](const Eigen::VectorXd& x) -> std::optional<Eigen::VectorXd> {
    const double nx = x.norm();
    if (!(nx > 0.0)) return std::nullopt;
    return Eigen::VectorXd(x / nx);
  };
  def.geodesic = sphere_angle;
  if (signed_permutation_count(n, false) <= kMaxStoredSymmetries) {
    for (const auto& [perm, signs] : signed_permutations(n, false)) {
      Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) Q(i, perm[static_cast<std::size_t>(i)]) = signs[static_cast<std::size_t>(i)];
      def.symmetries.push_back(Q);
    }
  }
  return Variety(std::move(def));
}

Variety make_torus(double R, double r) {
  if (!(R > r && r > 0.0)) throw InputError("torus needs R > r > 0");
  Variety::Definition def;
  std::ostringstream name;
  name << "torus:" << R << "," << r;
  def.name = name.str();
  def.ambient_dim = 3;
  def.intrinsic_dim = 2;
  def.kind = VarietyKind::torus;
  def.params = {R, r};
  def.degree_hint = 4;
  // (|x|^2 + R^2 - r^2)^2 - 4 R^2 (x1^2 + x2^2)
  MultiPoly s = MultiPoly::constant(3, R * R - r * r);
  MultiPoly rho2(3);
  for (int k = 0; k < 3; ++k) {
    Exponent e{0, 0, 0};
    e[static_cast<std::size_t>(k)] = 2;
    s.add_term(e, 1.0);
    if (k < 2) rho2.add_term(e, 1.0);
  }
  def.defining = {s * s - (4.0 * R * R) * rho2};
  def.sampler = [R, r](const Variety&, std::size_t count, std::uint64_t seed) {
    auto rng = make_rng(seed, {0x7023});
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    PointConfig out(3, static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
      double u = 0.0, v = 0.0;
      do {
        u = angle(rng);
        v = angle(rng);
      } while (unif(rng) * (R + r) > R + r * std::cos(v));
      out.coords.col(static_cast<Eigen::Index>(i)) = torus_point(R, r, u, v);
    }
    return out;
  };
  def.exact_moment = [R, r](const Exponent& a) { return torus_moment(R, r, a); };
  def.fast_projection = [R, r](const Eigen::VectorXd& x) -> std::optional<Eigen::VectorXd> {
    const double rho = std::hypot(x[0], x[1]);
    if (!(rho > 0.0)) return std::nullopt;
    Eigen::VectorXd c(3);
    c << R * x[0] / rho, R * x[1] / rho, 0.0;
    const Eigen::VectorXd off = x - c;
    const double len = off.norm();
    if (!(len > 0.0)) return std::nullopt;
    return Eigen::VectorXd(c + (r / len) * off);
  };
  for (int mask = 0; mask < 8; ++mask) {
    for (int swap = 0; swap < 2; ++swap) {
      Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(3, 3);
      const int a = swap ? 1 : 0, b = swap ? 0 : 1;
      Q(0, a) = (mask & 1) ? -1.0 : 1.0;
      Q(1, b) = (mask & 2) ? -1.0 : 1.0;
      Q(2, 2) = (mask & 4) ? -1.0 : 1.0;
      def.symmetries.push_back(Q);
    }
  }
  return Variety(std::move(def));
}

Variety make_grassmannian(int k, int n) {
  if (!(k >= 1 && k < n)) throw InputError("grassmannian needs 1 <= k < n");
  const int dim = n * (n + 1) / 2;
  Variety::Definition def;
  def.name = "grassmann:" + std::to_string(k) + "," + std::to_string(n);
  def.ambient_dim = dim;
  def.intrinsic_dim = k * (n - k);
  def.kind = VarietyKind::grassmannian;
  def.params = {static_cast<double>(k), static_cast<double>(n)};
  def.defining = grassmann_equations(k, n);
  def.sampler = [k, n](const Variety&, std::size_t count, std::uint64_t seed) {
    auto rng = make_rng(seed, {0x6a55});
    std::normal_distribution<double> g;
    PointConfig out(n * (n + 1) / 2, static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
      Eigen::MatrixXd G(n, k);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < k; ++b) G(a, b) = g(rng);
      }
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
      const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
      out.coords.col(static_cast<Eigen::Index>(i)) = grassmann_coords(Q * Q.transpose());
    }
    return out;
  };
  def.fast_projection = [k, n](const Eigen::VectorXd& x) -> std::optional<Eigen::VectorXd> {
    return grassmann_round(x, k, n);
  };
  def.geodesic = [k, n](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    return grassmann_geodesic(x, y, k, n);
  };
  if (signed_permutation_count(n, true) <= kMaxStoredSymmetries) {
    for (const auto& [perm, signs] : signed_permutations(n, true)) {
      Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) Q(i, perm[static_cast<std::size_t>(i)]) = signs[static_cast<std::size_t>(i)];
      Eigen::MatrixXd map(dim, dim);
      for (int c = 0; c < dim; ++c) {
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(dim, c);
        map.col(c) = grassmann_coords(Q * grassmann_matrix(e, n) * Q.transpose());
      }
      def.symmetries.push_back(map);
    }
  }
  return Variety(std::move(def));
}

Variety make_custom_variety(std::string name, int ambient_dim, int intrinsic_dim,
                            std::vector<MultiPoly> defining, std::optional<int> degree_hint) {
  Variety::Definition def;
  def.name = std::move(name);
  def.ambient_dim = ambient_dim;
  def.intrinsic_dim = intrinsic_dim;
  def.defining = std::move(defining);
  def.kind = VarietyKind::custom;
  def.degree_hint = degree_hint;
  def.sampler = manifold_mcmc_sampler;
  return Variety(std::move(def));
}

Variety resolve_variety(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto numbers = [&](std::size_t expected) {
    std::vector<double> vals;
    std::stringstream ss(tail);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw InputError("malformed variety parameters in '" + spec + "'");
      }
    }
    if (vals.size() != expected) throw InputError("wrong number of parameters in '" + spec + "'");
    return vals;
  };
  auto as_int = [&](double v) {
    if (v != std::floor(v)) throw InputError("integer parameter expected in '" + spec + "'");
    return static_cast<int>(v);
  };
  if (colon != std::string::npos && head == "sphere") return make_sphere(as_int(numbers(1)[0]));
  if (colon != std::string::npos && head == "torus") {
    const auto v = numbers(2);
    return make_torus(v[0], v[1]);
  }
  if (colon != std::string::npos && (head == "grassmann" || head == "grassmannian")) {
    const auto v = numbers(2);
    return make_grassmannian(as_int(v[0]), as_int(v[1]));
  }
  if (std::filesystem::exists(spec)) return load_variety_json(spec);
  throw InputError("unknown variety '" + spec + "'");
}

}  // namespace tdesign
