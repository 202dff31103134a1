#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace tdesign {

// Points are stored column-wise: coords.col(i) is the i-th point.
struct PointConfig {
  Eigen::MatrixXd coords;

  PointConfig() = default;
  explicit PointConfig(Eigen::MatrixXd c) : coords(std::move(c)) {}
  PointConfig(Eigen::Index ambient_dim, Eigen::Index count) : coords(ambient_dim, count) {}

  Eigen::Index size() const { return coords.cols(); }
  Eigen::Index ambient_dim() const { return coords.rows(); }
  Eigen::VectorXd point(Eigen::Index i) const { return coords.col(i); }
  bool operator==(const PointConfig& other) const {
    return coords.rows() == other.coords.rows() && coords.cols() == other.coords.cols() &&
           coords == other.coords;
  }
};

// Pairwise (tree) summation. The tree shape depends only on the length, so the
// result is reproducible for a given input order.
double pairwise_sum(std::span<const double> values);
double pairwise_sum(const Eigen::Ref<const Eigen::VectorXd>& values);

// Binomial coefficient as an exact integer for the small arguments used here.
std::uint64_t binomial(int n, int k);

// Independent random stream derived from a seed and a list of stream indices.
std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {});

// Caps the number of worker threads used by parallel_for (0 = hardware).
void set_thread_limit(unsigned threads);
unsigned thread_limit();

// Runs body(begin, end) over fixed-size blocks of [0, count). The block layout
// is independent of the thread count, so per-block reductions combined in
// block order give thread-count-independent results.
void parallel_for_blocks(std::size_t count, std::size_t block,
                         const std::function<void(std::size_t block_index, std::size_t begin,
                                                  std::size_t end)>& body);

inline std::size_t block_count(std::size_t count, std::size_t block) {
  return (count + block - 1) / block;
}

}  // namespace tdesign
