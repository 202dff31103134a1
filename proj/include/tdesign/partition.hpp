#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tdesign/multipoly.hpp"
#include "tdesign/numeric.hpp"
#include "tdesign/variety.hpp"

namespace tdesign {

struct PartitionOptions {
  int max_iter = 200;
  // Stop after this many iterations without a better Lloyd energy.
  int stall_limit = 20;
  // Candidate centers per sample point in the balanced assignment.
  int neighbors = 12;
  int price_rounds = 25;
};

// Equal-count decomposition of a fine sample of M.
struct Partition {
  std::string variety;
  int N = 0;
  std::uint64_t seed = 0;
  PointConfig sample;
  std::vector<int> assignment;
  PointConfig centers;
  Eigen::VectorXd region_measure;
  Eigen::VectorXd region_diameter;
  double norm_R = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;

  // members()[i] lists the sample indices of region i in ascending order.
  std::vector<std::vector<int>> members() const;
};

// Requires sample_size >= 100 N.
Partition area_regular_partition(const Variety& variety, int N, std::size_t sample_size,
                                 std::uint64_t seed, const PartitionOptions& options = {});
// Same algorithm on a caller-supplied sample.
Partition partition_sample(const Variety& variety, int N, PointConfig sample, std::uint64_t seed,
                           const PartitionOptions& options = {});

// Exact +-1 balanced nearest-center assignment (capacities ceil/floor of S/N).
std::vector<int> balanced_assignment(const PointConfig& sample, const PointConfig& centers,
                                     const PartitionOptions& options = {});

struct SandwichReport {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
};

// c2: largest center-to-member distance; c1: smallest center-to-outsider
// distance; both scaled by N^(1/d).
SandwichReport ball_sandwich_check(const Partition& partition, const Variety& variety);

enum class PickStrategy { center, random, worst_gradient };

std::string to_string(PickStrategy s);

PointConfig pick_centers(const Partition& partition);
PointConfig pick_random(const Partition& partition, std::uint64_t seed);
// Per region, the sample point maximizing |grad_t f|.
PointConfig pick_worst_gradient(const Partition& partition, const Variety& variety, const MultiPoly& f);

PointConfig pick_points(const Partition& partition, PickStrategy strategy, std::uint64_t seed,
                        const Variety* variety = nullptr, const MultiPoly* f = nullptr);

// Largest pairwise variety distance inside a set of points.
double set_diameter(const Variety& variety, const PointConfig& points, const std::vector<int>& idx);

}  // namespace tdesign
