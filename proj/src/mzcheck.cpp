#include "tdesign/mzcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "tdesign/error.hpp"

namespace tdesign {

namespace {

constexpr double kDegenerate = 1e-14;

struct DenseValues {
  double integral = 0.0;
  double se = 0.0;
};

DenseValues dense_integral(const QuadratureRule& rule, const Eigen::VectorXd& values) {
  return DenseValues{integrate(rule, values), standard_error(rule, values)};
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  auto rng = make_rng(seed, stream);
  return rng();
}

// m x (count * q) feature block: column block i is phi(x_i) (q = 1) or the
// tangential Jacobian of phi at x_i (q = n).
Eigen::MatrixXd features(const OrthoBasis& basis, const Variety& variety, bool gradient,
                         const PointConfig& pts, Eigen::Index begin, Eigen::Index end) {
  const int m = basis.dim();
  const int n = variety.ambient_dim();
  const int q = gradient ? n : 1;
  Eigen::MatrixXd F(m, (end - begin) * q);
  for (Eigen::Index i = begin; i < end; ++i) {
    const Eigen::VectorXd x = pts.coords.col(i);
    if (gradient) {
      F.middleCols((i - begin) * q, q) = basis.gradient(x) * tangent_projector(variety, x);
    } else {
      F.col(i - begin) = basis.evaluate(x);
    }
  }
  return F;
}

struct TrialNorms {
  // rows: trials, cols: nodes
  Eigen::MatrixXd euclid;
  Eigen::MatrixXd abs_sum;
};

// Per-(trial, node) Frobenius norm and entry-wise absolute sum of the
// p x q block B_k^T F(x).
TrialNorms trial_norms(const Eigen::MatrixXd& coeffs, int p, const Eigen::MatrixXd& F, int q) {
  const Eigen::MatrixXd Y = coeffs.transpose() * F;
  const Eigen::Index trials = coeffs.cols() / p;
  const Eigen::Index nodes = F.cols() / q;
  TrialNorms out{Eigen::MatrixXd(trials, nodes), Eigen::MatrixXd(trials, nodes)};
  for (Eigen::Index k = 0; k < trials; ++k) {
    for (Eigen::Index i = 0; i < nodes; ++i) {
      const auto blk = Y.block(k * p, i * q, p, q);
      out.euclid(k, i) = blk.norm();
      out.abs_sum(k, i) = blk.cwiseAbs().sum();
    }
  }
  return out;
}

struct TrialIntegrals {
  Eigen::VectorXd euclid, euclid_se, abs_sum, abs_sum_se;
};

TrialIntegrals dense_trial_integrals(const OrthoBasis& basis, const Variety& variety, bool gradient,
                                     const Eigen::MatrixXd& coeffs, int p, const QuadratureRule& rule) {
  const Eigen::Index trials = coeffs.cols() / p;
  const int q = gradient ? variety.ambient_dim() : 1;
  const Eigen::Index total = rule.nodes.size();
  const Eigen::Index g = static_cast<Eigen::Index>(rule.group_size);
  const Eigen::Index block = g * std::max<Eigen::Index>(1, 4096 / g);
  const std::size_t nblocks = block_count(static_cast<std::size_t>(total), static_cast<std::size_t>(block));
  // Per block: weighted sums and group-mean moments for both norms.
  struct Partial {
    Eigen::VectorXd e, a, e_gsum, e_gsq, a_gsum, a_gsq;
  };
  std::vector<Partial> parts(nblocks);
  parallel_for_blocks(static_cast<std::size_t>(total), static_cast<std::size_t>(block),
                      [&](std::size_t b, std::size_t begin, std::size_t end) {
                        const Eigen::Index bb = static_cast<Eigen::Index>(begin), be = static_cast<Eigen::Index>(end);
                        const TrialNorms tn = trial_norms(coeffs, p, features(basis, variety, gradient, rule.nodes, bb, be), q);
                        Partial& P = parts[b];
                        const Eigen::VectorXd w = rule.weights.segment(bb, be - bb);
                        P.e = tn.euclid * w;
                        P.a = tn.abs_sum * w;
                        P.e_gsum = P.e_gsq = P.a_gsum = P.a_gsq = Eigen::VectorXd::Zero(trials);
                        for (Eigen::Index s = 0; s + g <= be - bb; s += g) {
                          const Eigen::VectorXd em = tn.euclid.middleCols(s, g).rowwise().mean();
                          const Eigen::VectorXd am = tn.abs_sum.middleCols(s, g).rowwise().mean();
                          P.e_gsum += em;
                          P.e_gsq += em.cwiseAbs2();
                          P.a_gsum += am;
                          P.a_gsq += am.cwiseAbs2();
                        }
                      });
  TrialIntegrals out;
  out.euclid = out.abs_sum = Eigen::VectorXd::Zero(trials);
  Eigen::VectorXd es = Eigen::VectorXd::Zero(trials), esq = es, as = es, asq = es;
  for (const Partial& P : parts) {
    out.euclid += P.e;
    out.abs_sum += P.a;
    es += P.e_gsum;
    esq += P.e_gsq;
    as += P.a_gsum;
    asq += P.a_gsq;
  }
  const double G = static_cast<double>(total / g);
  auto se = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& sq) {
    Eigen::VectorXd v(trials);
    for (Eigen::Index k = 0; k < trials; ++k) {
      const double mean = s[k] / G;
      const double var = std::max(0.0, (sq[k] - G * mean * mean) / (G - 1.0));
      v[k] = std::sqrt(var / G);
    }
    return v;
  };
  if (rule.kind() == QuadratureKind::monte_carlo && G > 1) {
    out.euclid_se = se(es, esq);
    out.abs_sum_se = se(as, asq);
  } else {
    out.euclid_se = out.abs_sum_se = Eigen::VectorXd::Zero(trials);
  }
  return out;
}

}  // namespace

std::string to_string(MZKind kind) {
  switch (kind) {
    case MZKind::absolute_value:
      return "absolute_value";
    case MZKind::gradient:
      return "gradient";
    case MZKind::vector:
      return "vector";
  }
  return "unknown";
}

const std::vector<double>& default_multipliers() {
  static const std::vector<double> grid{0.5, 1, 2, 4, 8, 16};
  return grid;
}

MZRatio mz_ratio(const PointConfig& picks, const MultiPoly& f, const QuadratureRule& rule) {
  if (picks.size() < 1) throw InputError("MZ ratio needs at least one pick");
  Eigen::VectorXd dense(static_cast<Eigen::Index>(rule.size()));
  for (Eigen::Index i = 0; i < dense.size(); ++i) dense[i] = std::abs(f.evaluate(rule.nodes.coords.col(i)));
  const DenseValues d = dense_integral(rule, dense);
  if (d.integral < kDegenerate) throw DegenerateError("integral of |f| vanishes on the variety");
  Eigen::VectorXd disc(picks.size());
  for (Eigen::Index i = 0; i < picks.size(); ++i) disc[i] = std::abs(f.evaluate(picks.coords.col(i)));
  const double num = pairwise_sum(disc) / static_cast<double>(picks.size());
  const double r = num / d.integral;
  return MZRatio{r, r * d.se / d.integral};
}

MZRatio mz_gradient_ratio(const Variety& variety, const PointConfig& picks, const MultiPoly& f,
                          const QuadratureRule& rule) {
  if (picks.size() < 1) throw InputError("MZ ratio needs at least one pick");
  Eigen::VectorXd dense(static_cast<Eigen::Index>(rule.size()));
  for (Eigen::Index i = 0; i < dense.size(); ++i) {
    dense[i] = tangential_gradient(variety, f, rule.nodes.coords.col(i)).norm();
  }
  const DenseValues d = dense_integral(rule, dense);
  if (d.integral < kDegenerate) throw DegenerateError("integral of |grad_t f| vanishes: f is constant on the variety");
  Eigen::VectorXd disc(picks.size());
  for (Eigen::Index i = 0; i < picks.size(); ++i) {
    disc[i] = tangential_gradient(variety, f, picks.coords.col(i)).norm();
  }
  const double num = pairwise_sum(disc) / static_cast<double>(picks.size());
  const double r = num / d.integral;
  return MZRatio{r, r * d.se / d.integral};
}

VectorMZResult mz_vector_ratio(const PointConfig& picks, const std::vector<MultiPoly>& components,
                               const QuadratureRule& rule) {
  if (components.empty()) throw InputError("vector MZ ratio needs at least one component");
  auto norms = [&](const Eigen::VectorXd& x, double& euclid, double& sum) {
    euclid = 0.0;
    sum = 0.0;
    for (const auto& q : components) {
      const double v = q.evaluate(x);
      euclid += v * v;
      sum += std::abs(v);
    }
    euclid = std::sqrt(euclid);
  };
  Eigen::VectorXd de(static_cast<Eigen::Index>(rule.size())), ds(de.size());
  for (Eigen::Index i = 0; i < de.size(); ++i) norms(rule.nodes.coords.col(i), de[i], ds[i]);
  const double ie = integrate(rule, de), is = integrate(rule, ds);
  if (ie < kDegenerate) throw DegenerateError("integral of |Q| vanishes on the variety");
  Eigen::VectorXd pe(picks.size()), ps(picks.size());
  for (Eigen::Index i = 0; i < picks.size(); ++i) norms(picks.coords.col(i), pe[i], ps[i]);
  VectorMZResult out;
  out.ratio = pairwise_sum(pe) / static_cast<double>(picks.size()) / ie;
  out.component_ratio = pairwise_sum(ps) / static_cast<double>(picks.size()) / is;
  const double sm = std::sqrt(static_cast<double>(components.size()));
  const double slack = 1e-12;
  out.bound_ok = out.ratio >= out.component_ratio / sm * (1 - slack) && out.ratio <= out.component_ratio * sm * (1 + slack);
  return out;
}

std::vector<MZReport> mz_sweep(const Variety& variety, const std::vector<int>& t_list,
                               const std::vector<double>& multipliers, int trials, std::uint64_t seed,
                               const MZSweepOptions& options) {
  if (trials < 1) throw InputError("MZ sweep needs at least one trial");
  if (options.pick_draws < 1) throw InputError("MZ sweep needs at least one pick draw");
  if (multipliers.empty()) throw InputError("MZ sweep needs at least one multiplier");
  if (options.extremal_picks && options.kind == MZKind::vector) {
    throw InputError("extremal picks are not defined for the vector kind");
  }
  const bool gradient = options.kind == MZKind::gradient;
  const int d = variety.intrinsic_dim();
  const int p = options.kind == MZKind::vector ? (options.vector_components > 0 ? options.vector_components : 2 * d) : 1;
  const QuadratureRule dense =
      make_quadrature(variety, monte_carlo_descriptor(variety, options.dense_nodes, derive_seed(seed, {0xde05e}), true));
  std::vector<MZReport> reports;
  for (int t : t_list) {
    auto basis = std::make_shared<const OrthoBasis>(build_default_basis(variety, t, seed));
    const int m = basis->dim();
    if (gradient && m < 2) throw DegenerateError("gradient MZ check on a space of constants: grad_t f vanishes");

    // Random unit-norm coefficient vectors, one p-column block per trial.
    Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(trials) * p);
    for (int k = 0; k < trials; ++k) {
      auto rng = make_rng(seed, {0xc0ef, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(k)});
      std::normal_distribution<double> g;
      for (int c = 0; c < p; ++c) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
        for (int j = gradient ? 1 : 0; j < m; ++j) v[j] = g(rng);
        coeffs.col(static_cast<Eigen::Index>(k) * p + c) = v / v.norm();
      }
    }
    const TrialIntegrals ti = dense_trial_integrals(*basis, variety, gradient, coeffs, p, dense);
    for (int k = 0; k < trials; ++k) {
      if (ti.euclid[k] < kDegenerate) throw DegenerateError("dense integral of a random polynomial vanishes");
    }

    const double td = std::pow(static_cast<double>(t), d);
    for (double c : multipliers) {
      if (!(c > 0.0)) throw InputError("MZ multipliers must be positive");
      const int N = std::max(1, static_cast<int>(std::ceil(c * td - 1e-9)));
      const Partition part = area_regular_partition(variety, N, options.sample_per_region * static_cast<std::size_t>(N),
                                                    derive_seed(seed, {0x9a27, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(N)}));
      MZReport r;
      r.variety = variety.name();
      r.t = t;
      r.N = N;
      r.multiplier = c;
      r.trials = trials;
      r.pick_draws = options.pick_draws;
      r.kind = options.kind;
      r.extremal_picks = options.extremal_picks;
      r.worst_ratio_low = std::numeric_limits<double>::infinity();
      r.worst_ratio_high = -std::numeric_limits<double>::infinity();
      if (options.kind == MZKind::vector) r.vector_bound_ok = true;
      double lo = options.low, hi = options.high;
      bool judge = true;
      if (gradient) {
        judge = options.gradient_bound.has_value();
        if (judge) {
          hi = *options.gradient_bound;
          lo = 1.0 / hi;
        }
      }
      const int q = gradient ? variety.ambient_dim() : 1;
      auto judge_ratio = [&](double ratio, int k) {
        const double se = ratio * ti.euclid_se[k] / ti.euclid[k];
        r.worst_ratio_low = std::min(r.worst_ratio_low, ratio);
        r.worst_ratio_high = std::max(r.worst_ratio_high, ratio);
        if (judge && (ratio < lo || ratio > hi)) {
          const double gap = ratio < lo ? lo - ratio : ratio - hi;
          if (gap <= options.se_factor * se) {
            ++r.inconclusive;
          } else {
            ++r.violations;
          }
        }
      };
      if (options.extremal_picks) {
        const Eigen::MatrixXd F = features(*basis, variety, gradient, part.sample, 0, part.sample.size());
        const auto groups = part.members();
        for (int k = 0; k < trials; ++k) {
          const TrialNorms tn = trial_norms(coeffs.middleCols(static_cast<Eigen::Index>(k) * p, p), p, F, q);
          Eigen::VectorXd mins(N), maxs(N);
          for (int j = 0; j < N; ++j) {
            double a = std::numeric_limits<double>::infinity(), b = 0.0;
            for (int i : groups[static_cast<std::size_t>(j)]) {
              a = std::min(a, tn.euclid(0, i));
              b = std::max(b, tn.euclid(0, i));
            }
            mins[j] = a;
            maxs[j] = b;
          }
          judge_ratio(pairwise_sum(mins) / N / ti.euclid[k], k);
          judge_ratio(pairwise_sum(maxs) / N / ti.euclid[k], k);
        }
        r.K_estimate = std::max(r.worst_ratio_high, 1.0 / r.worst_ratio_low);
        reports.push_back(r);
        continue;
      }
      for (int k = 0; k < trials; ++k) {
        const Eigen::MatrixXd ck = coeffs.middleCols(static_cast<Eigen::Index>(k) * p, p);
        for (int draw = 0; draw < options.pick_draws; ++draw) {
          const PointConfig picks =
              pick_random(part, derive_seed(seed, {0x71c5, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(N),
                                                   static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(draw)}));
          const TrialNorms tn = trial_norms(ck, p, features(*basis, variety, gradient, picks, 0, picks.size()), q);
          const Eigen::VectorXd er = tn.euclid.row(0).transpose();
          const double ratio = pairwise_sum(er) / N / ti.euclid[k];
          judge_ratio(ratio, k);
          if (options.kind == MZKind::vector) {
            const Eigen::VectorXd sr = tn.abs_sum.row(0).transpose();
            const double cratio = pairwise_sum(sr) / N / ti.abs_sum[k];
            const double sm = std::sqrt(static_cast<double>(p));
            if (ratio < cratio / sm * (1 - 1e-12) || ratio > cratio * sm * (1 + 1e-12)) r.vector_bound_ok = false;
          }
        }
      }
      r.K_estimate = std::max(r.worst_ratio_high, 1.0 / r.worst_ratio_low);
      reports.push_back(r);
    }
    if (!gradient) {
      const auto A = a_estimate(reports, t);
      for (auto& r : reports) {
        if (r.t == t) r.A_estimate = A;
      }
    }
  }
  return reports;
}

std::optional<double> a_estimate(const std::vector<MZReport>& reports, int t) {
  std::vector<const MZReport*> rows;
  for (const auto& r : reports) {
    if (r.t == t) rows.push_back(&r);
  }
  std::sort(rows.begin(), rows.end(), [](const MZReport* a, const MZReport* b) { return a->multiplier < b->multiplier; });
  std::optional<double> best;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    if ((*it)->violations > 0) break;
    best = (*it)->multiplier;
  }
  return best;
}

std::optional<double> k_estimate(const std::vector<MZReport>& reports, int t, double c_min) {
  std::optional<double> k;
  for (const auto& r : reports) {
    if (r.t != t || r.multiplier < c_min || !r.K_estimate) continue;
    k = std::max(k.value_or(0.0), *r.K_estimate);
  }
  return k;
}

}  // namespace tdesign
