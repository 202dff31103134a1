#include "tdesign/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "tdesign/error.hpp"

namespace tdesign {

namespace {

// Static kd-tree over the columns of a matrix, for k-nearest queries.
class KdTree {
 public:
  explicit KdTree(const Eigen::MatrixXd& pts) : pts_(pts), idx_(static_cast<std::size_t>(pts.cols())) {
    std::iota(idx_.begin(), idx_.end(), 0);
    nodes_.reserve(idx_.size());
    if (!idx_.empty()) build(0, idx_.size());
  }

  // Indices of the k nearest columns, sorted by (distance, index).
  void query(const Eigen::Ref<const Eigen::VectorXd>& q, int k, std::vector<std::pair<double, int>>& out) const {
    out.clear();
    heap_ = {};
    search(0, q, k);
    while (!heap_.empty()) {
      out.push_back(heap_.top());
      heap_.pop();
    }
    std::reverse(out.begin(), out.end());
  }

 private:
  struct Node {
    std::size_t begin, end;
    int dim;
    double split;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{begin, end, -1, 0.0});
    if (end - begin <= 8) return id;
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(pts_.rows(), std::numeric_limits<double>::infinity());
    Eigen::VectorXd hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(pts_.col(idx_[i]));
      hi = hi.cwiseMax(pts_.col(idx_[i]));
    }
    Eigen::Index dim = 0;
    (hi - lo).maxCoeff(&dim);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(idx_.begin() + static_cast<std::ptrdiff_t>(begin), idx_.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx_.begin() + static_cast<std::ptrdiff_t>(end), [&](int a, int b) {
                       const double va = pts_(dim, a), vb = pts_(dim, b);
                       return va < vb || (va == vb && a < b);
                     });
    nodes_[static_cast<std::size_t>(id)].dim = static_cast<int>(dim);
    nodes_[static_cast<std::size_t>(id)].split = pts_(dim, idx_[mid]);
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  void offer(double d, int i, int k) const {
    const std::pair<double, int> item{d, i};
    if (static_cast<int>(heap_.size()) < k) {
      heap_.push(item);
    } else if (item < heap_.top()) {
      heap_.pop();
      heap_.push(item);
    }
  }

  void search(int id, const Eigen::Ref<const Eigen::VectorXd>& q, int k) const {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.dim < 0) {
      for (std::size_t i = nd.begin; i < nd.end; ++i) offer((pts_.col(idx_[i]) - q).squaredNorm(), idx_[i], k);
      return;
    }
    const double diff = q[nd.dim] - nd.split;
    const int near = diff < 0 ? nd.left : nd.right;
    const int far = diff < 0 ? nd.right : nd.left;
    search(near, q, k);
    if (static_cast<int>(heap_.size()) < k || diff * diff <= heap_.top().first) search(far, q, k);
  }

  const Eigen::MatrixXd& pts_;
  std::vector<int> idx_;
  std::vector<Node> nodes_;
  mutable std::priority_queue<std::pair<double, int>> heap_;
};

std::vector<int> capacities(std::size_t S, int N) {
  const std::size_t q = S / static_cast<std::size_t>(N);
  const std::size_t rem = S % static_cast<std::size_t>(N);
  std::vector<int> cap(static_cast<std::size_t>(N), static_cast<int>(q));
  for (std::size_t j = 0; j < rem; ++j) ++cap[j];
  return cap;
}

struct AssignmentState {
  std::vector<double> prices;
};

// Forward auction over capacity slots with epsilon scaling: minimizes the
// total cost over the candidate graph within S * eps_final. prices holds the
// cheapest slot price per center and is warm-started across calls. Returns
// false when the bid budget runs out (e.g. an infeasible candidate graph).
bool auction_assign(const std::vector<int>& cand, const std::vector<double>& cost, std::size_t K,
                    const std::vector<int>& cap, double eps_final, std::vector<double>& prices,
                    std::vector<int>& result) {
  const std::size_t S = cand.size() / K;
  const std::size_t N = cap.size();
  using Slot = std::pair<double, int>;  // (price, holder)
  std::vector<std::priority_queue<Slot, std::vector<Slot>, std::greater<Slot>>> slots(N);
  double spread = 0.0;
  for (std::size_t i = 0; i < S; ++i) spread = std::max(spread, cost[i * K + K - 1] - cost[i * K]);
  double eps = std::max(spread / 4.0, eps_final);
  const std::size_t budget = 400 * S + 100000;
  std::size_t bids = 0;
  result.assign(S, -1);
  while (true) {
    for (std::size_t j = 0; j < N; ++j) {
      // Keep the current price level; drop holders for the new phase.
      double p = prices[j];
      if (!slots[j].empty()) p = slots[j].top().first;
      slots[j] = {};
      for (int c = 0; c < cap[j]; ++c) slots[j].push({p, -1});
    }
    std::fill(result.begin(), result.end(), -1);
    std::queue<int> open;
    for (std::size_t i = 0; i < S; ++i) open.push(static_cast<int>(i));
    while (!open.empty()) {
      if (++bids > budget) return false;
      const int i = open.front();
      open.pop();
      std::size_t best = 0;
      double w1 = std::numeric_limits<double>::infinity(), w2 = w1;
      for (std::size_t k = 0; k < K; ++k) {
        const std::size_t e = static_cast<std::size_t>(i) * K + k;
        const double v = cost[e] + slots[static_cast<std::size_t>(cand[e])].top().first;
        if (v < w1) {
          w2 = w1;
          w1 = v;
          best = e;
        } else if (v < w2) {
          w2 = v;
        }
      }
      if (!std::isfinite(w2)) w2 = w1;
      const std::size_t j = static_cast<std::size_t>(cand[best]);
      const double bid = slots[j].top().first + (w2 - w1) + eps;
      const int evicted = slots[j].top().second;
      slots[j].pop();
      slots[j].push({bid, i});
      result[static_cast<std::size_t>(i)] = static_cast<int>(j);
      if (evicted >= 0) {
        result[static_cast<std::size_t>(evicted)] = -1;
        open.push(evicted);
      }
    }
    if (eps <= eps_final) break;
    eps = std::max(eps / 5.0, eps_final);
  }
  for (std::size_t j = 0; j < N; ++j) prices[j] = slots[j].top().first;
  return true;
}

std::vector<int> assign(const PointConfig& sample, const PointConfig& centers, const PartitionOptions& opt,
                        AssignmentState& state, double& energy) {
  const Eigen::Index S = sample.size();
  const int N = static_cast<int>(centers.size());
  const int K = std::min(opt.neighbors, N);
  const std::vector<int> cap = capacities(static_cast<std::size_t>(S), N);
  if (state.prices.size() != static_cast<std::size_t>(N)) state.prices.assign(static_cast<std::size_t>(N), 0.0);

  std::vector<int> cand(static_cast<std::size_t>(S * K));
  std::vector<double> cost(static_cast<std::size_t>(S * K));
  {
    const KdTree tree(centers.coords);
    const std::size_t block = 1024;
    parallel_for_blocks(static_cast<std::size_t>(S), block, [&](std::size_t, std::size_t begin, std::size_t end) {
      std::vector<std::pair<double, int>> nn;
      for (std::size_t i = begin; i < end; ++i) {
        tree.query(sample.coords.col(static_cast<Eigen::Index>(i)), K, nn);
        for (int k = 0; k < K; ++k) {
          cand[i * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)] = nn[static_cast<std::size_t>(k)].second;
          cost[i * static_cast<std::size_t>(K) + static_cast<std::size_t>(k)] = nn[static_cast<std::size_t>(k)].first;
        }
      }
    });
  }
  double scale = 0.0;
  for (Eigen::Index i = 0; i < S; ++i) scale += cost[static_cast<std::size_t>(i * K)];
  scale = std::max(scale / static_cast<double>(S), 1e-300);

  std::vector<int> result;
  if (auction_assign(cand, cost, static_cast<std::size_t>(K), cap, 1e-4 * scale, state.prices, result)) {
    energy = 0.0;
    for (Eigen::Index i = 0; i < S; ++i) {
      for (int k = 0; k < K; ++k) {
        const std::size_t e = static_cast<std::size_t>(i * K + k);
        if (cand[e] == result[static_cast<std::size_t>(i)]) {
          energy += cost[e];
          break;
        }
      }
    }
    return result;
  }

  auto adjusted = [&](std::size_t e) { return cost[e] + state.prices[static_cast<std::size_t>(cand[e])]; };

  // Price rounds: nudge centers toward their capacities.
  std::vector<int> load(static_cast<std::size_t>(N));
  for (int round = 0; round < opt.price_rounds; ++round) {
    std::fill(load.begin(), load.end(), 0);
    for (Eigen::Index i = 0; i < S; ++i) {
      std::size_t best = static_cast<std::size_t>(i * K);
      for (int k = 1; k < K; ++k) {
        const std::size_t e = static_cast<std::size_t>(i * K + k);
        if (adjusted(e) < adjusted(best)) best = e;
      }
      ++load[static_cast<std::size_t>(cand[best])];
    }
    bool balanced = true;
    for (int j = 0; j < N; ++j) balanced = balanced && load[static_cast<std::size_t>(j)] == cap[static_cast<std::size_t>(j)];
    if (balanced) break;
    for (int j = 0; j < N; ++j) {
      state.prices[static_cast<std::size_t>(j)] +=
          0.5 * scale * (load[static_cast<std::size_t>(j)] - cap[static_cast<std::size_t>(j)]) / cap[static_cast<std::size_t>(j)];
    }
  }

  // Greedy fill in adjusted-cost order; ties by sample index then candidate rank.
  std::vector<std::size_t> order(static_cast<std::size_t>(S * K));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> key(order.size());
  for (std::size_t e = 0; e < order.size(); ++e) key[e] = adjusted(e);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return key[a] < key[b] || (key[a] == key[b] && a < b);
  });
  result.assign(static_cast<std::size_t>(S), -1);
  std::fill(load.begin(), load.end(), 0);
  energy = 0.0;
  for (std::size_t e : order) {
    const std::size_t i = e / static_cast<std::size_t>(K);
    const int j = cand[e];
    if (result[i] >= 0 || load[static_cast<std::size_t>(j)] >= cap[static_cast<std::size_t>(j)]) continue;
    result[i] = j;
    ++load[static_cast<std::size_t>(j)];
    energy += cost[e];
  }
  // Points whose candidates all filled up go to the nearest center with room.
  for (Eigen::Index i = 0; i < S; ++i) {
    if (result[static_cast<std::size_t>(i)] >= 0) continue;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < N; ++j) {
      if (load[static_cast<std::size_t>(j)] >= cap[static_cast<std::size_t>(j)]) continue;
      const double d = (sample.coords.col(i) - centers.coords.col(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    result[static_cast<std::size_t>(i)] = best;
    ++load[static_cast<std::size_t>(best)];
    energy += best_d;
  }
  return result;
}

PointConfig farthest_point_init(const PointConfig& sample, int N, std::uint64_t seed) {
  const Eigen::Index pool = std::min<Eigen::Index>(sample.size(), 40 * static_cast<Eigen::Index>(N));
  auto rng = make_rng(seed, {0xfa47});
  std::uniform_int_distribution<Eigen::Index> pick(0, pool - 1);
  PointConfig centers(sample.ambient_dim(), N);
  Eigen::Index cur = pick(rng);
  Eigen::VectorXd mind = Eigen::VectorXd::Constant(pool, std::numeric_limits<double>::infinity());
  for (int c = 0; c < N; ++c) {
    centers.coords.col(c) = sample.coords.col(cur);
    for (Eigen::Index i = 0; i < pool; ++i) {
      mind[i] = std::min(mind[i], (sample.coords.col(i) - sample.coords.col(cur)).squaredNorm());
    }
    mind.maxCoeff(&cur);
  }
  return centers;
}

Eigen::VectorXd recenter(const Variety& variety, const PointConfig& sample, const std::vector<int>& members) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(sample.ambient_dim());
  for (int i : members) mean += sample.coords.col(i);
  mean /= static_cast<double>(members.size());
  try {
    return project_to_variety(variety, mean).coords;
  } catch (const NumericalError&) {
    int best = members.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (int i : members) {
      const double d = (sample.coords.col(i) - mean).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return sample.coords.col(best);
  }
}

}  // namespace

std::vector<std::vector<int>> Partition::members() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(N));
  for (std::size_t i = 0; i < assignment.size(); ++i) out[static_cast<std::size_t>(assignment[i])].push_back(static_cast<int>(i));
  return out;
}

std::string to_string(PickStrategy s) {
  switch (s) {
    case PickStrategy::center:
      return "center";
    case PickStrategy::random:
      return "random";
    case PickStrategy::worst_gradient:
      return "worst_gradient";
  }
  return "unknown";
}

std::vector<int> balanced_assignment(const PointConfig& sample, const PointConfig& centers,
                                     const PartitionOptions& options) {
  if (centers.size() < 1 || sample.size() < centers.size()) throw InputError("need 1 <= N <= sample size");
  AssignmentState state;
  PartitionOptions opt = options;
  opt.price_rounds = std::max(opt.price_rounds, 100);
  double energy = 0.0;
  return assign(sample, centers, opt, state, energy);
}

double set_diameter(const Variety& variety, const PointConfig& points, const std::vector<int>& idx) {
  double diam = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) {
      diam = std::max(diam, distance(variety, points.coords.col(idx[a]), points.coords.col(idx[b])));
    }
  }
  return diam;
}

Partition partition_sample(const Variety& variety, int N, PointConfig sample, std::uint64_t seed,
                           const PartitionOptions& options) {
  if (N < 1) throw InputError("partition needs N >= 1");
  if (sample.size() < N) throw InputError("sample smaller than the number of regions");
  Partition p;
  p.variety = variety.name();
  p.N = N;
  p.seed = seed;
  p.sample = std::move(sample);
  p.centers = farthest_point_init(p.sample, N, seed);

  AssignmentState state;
  std::vector<int> prev;
  std::vector<int> best_assignment;
  PointConfig best_centers;
  double best_energy = std::numeric_limits<double>::infinity();
  int stall = 0;
  for (int iter = 0; iter < options.max_iter; ++iter) {
    double energy = 0.0;
    std::vector<int> a = assign(p.sample, p.centers, options, state, energy);
    p.iterations = iter + 1;
    if (energy < best_energy * (1.0 - 1e-12)) {
      best_energy = energy;
      best_assignment = a;
      best_centers = p.centers;
      stall = 0;
    } else {
      ++stall;
    }
    if (a == prev) {
      p.converged = true;
      best_assignment = a;
      best_centers = p.centers;
      break;
    }
    if (stall >= options.stall_limit) {
      std::ostringstream msg;
      msg << "Lloyd energy did not improve for " << options.stall_limit
          << " iterations; returning the best partition found";
      p.warnings.push_back(msg.str());
      break;
    }
    prev = std::move(a);
    p.assignment = prev;
    const auto groups = p.members();
    for (int j = 0; j < N; ++j) p.centers.coords.col(j) = recenter(variety, p.sample, groups[static_cast<std::size_t>(j)]);
  }
  if (!p.converged && p.warnings.empty()) p.warnings.push_back("balanced Lloyd reached the iteration limit");
  p.assignment = std::move(best_assignment);
  p.centers = std::move(best_centers);

  const auto groups = p.members();
  p.region_measure.resize(N);
  p.region_diameter.resize(N);
  const double S = static_cast<double>(p.sample.size());
  for (int j = 0; j < N; ++j) {
    const auto& g = groups[static_cast<std::size_t>(j)];
    p.region_measure[j] = static_cast<double>(g.size()) / S;
    p.region_diameter[j] = set_diameter(variety, p.sample, g);
  }
  p.norm_R = p.region_diameter.maxCoeff();
  return p;
}

Partition area_regular_partition(const Variety& variety, int N, std::size_t sample_size, std::uint64_t seed,
                                 const PartitionOptions& options) {
  if (N < 1) throw InputError("partition needs N >= 1");
  if (sample_size < 100 * static_cast<std::size_t>(N)) {
    std::ostringstream msg;
    msg << "sample size " << sample_size << " is below 100 N = " << 100 * static_cast<std::size_t>(N);
    throw InputError(msg.str());
  }
  PointConfig sample = sample_measure(variety, sample_size, seed);
  return partition_sample(variety, N, std::move(sample), seed, options);
}

SandwichReport ball_sandwich_check(const Partition& partition, const Variety& variety) {
  const int N = partition.N;
  const Eigen::Index S = partition.sample.size();
  const double scale = std::pow(static_cast<double>(N), 1.0 / variety.intrinsic_dim());
  double circ_max = 0.0;
  double in_min = std::numeric_limits<double>::infinity();
  constexpr int kPrefilter = 8;
  for (int j = 0; j < N; ++j) {
    const Eigen::VectorXd c = partition.centers.coords.col(j);
    std::vector<std::pair<double, Eigen::Index>> outside;
    for (Eigen::Index i = 0; i < S; ++i) {
      if (partition.assignment[static_cast<std::size_t>(i)] == j) {
        circ_max = std::max(circ_max, distance(variety, c, partition.sample.coords.col(i)));
      } else {
        outside.emplace_back((partition.sample.coords.col(i) - c).squaredNorm(), i);
      }
    }
    if (outside.empty()) continue;
    const std::size_t k = std::min<std::size_t>(kPrefilter, outside.size());
    std::partial_sort(outside.begin(), outside.begin() + static_cast<std::ptrdiff_t>(k), outside.end());
    for (std::size_t a = 0; a < k; ++a) {
      in_min = std::min(in_min, distance(variety, c, partition.sample.coords.col(outside[a].second)));
    }
  }
  // A single region has no outside points; its inradius is taken as the circumradius.
  if (!std::isfinite(in_min)) in_min = circ_max;
  return SandwichReport{in_min * scale, circ_max * scale};
}

PointConfig pick_centers(const Partition& partition) { return partition.centers; }

PointConfig pick_random(const Partition& partition, std::uint64_t seed) {
  auto rng = make_rng(seed, {0x91c5});
  const auto groups = partition.members();
  PointConfig out(partition.sample.ambient_dim(), partition.N);
  for (int j = 0; j < partition.N; ++j) {
    const auto& g = groups[static_cast<std::size_t>(j)];
    std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
    out.coords.col(j) = partition.sample.coords.col(g[pick(rng)]);
  }
  return out;
}

PointConfig pick_worst_gradient(const Partition& partition, const Variety& variety, const MultiPoly& f) {
  const auto groups = partition.members();
  PointConfig out(partition.sample.ambient_dim(), partition.N);
  for (int j = 0; j < partition.N; ++j) {
    int best = -1;
    double best_v = -1.0;
    for (int i : groups[static_cast<std::size_t>(j)]) {
      const double v = tangential_gradient(variety, f, partition.sample.coords.col(i)).norm();
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    out.coords.col(j) = partition.sample.coords.col(best);
  }
  return out;
}

PointConfig pick_points(const Partition& partition, PickStrategy strategy, std::uint64_t seed,
                        const Variety* variety, const MultiPoly* f) {
  switch (strategy) {
    case PickStrategy::center:
      return pick_centers(partition);
    case PickStrategy::random:
      return pick_random(partition, seed);
    case PickStrategy::worst_gradient:
      if (!variety || !f) throw InputError("worst_gradient picks need a variety and a polynomial");
      return pick_worst_gradient(partition, *variety, *f);
  }
  throw InputError("unknown pick strategy");
}

}  // namespace tdesign
