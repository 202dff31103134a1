#include "tdesign/numeric.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace tdesign {

namespace {

constexpr std::size_t kPairwiseLeaf = 8;

double pairwise_impl(const double* data, std::size_t n) {
  if (n <= kPairwiseLeaf) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += data[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_impl(data, half) + pairwise_impl(data + half, n - half);
}

std::atomic<unsigned> g_thread_limit{1};

}  // namespace

double pairwise_sum(std::span<const double> values) {
  return pairwise_impl(values.data(), values.size());
}

double pairwise_sum(const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.innerStride() == 1) {
    return pairwise_impl(values.data(), static_cast<std::size_t>(values.size()));
  }
  Eigen::VectorXd copy = values;
  return pairwise_impl(copy.data(), static_cast<std::size_t>(copy.size()));
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (std::uint64_t s : stream) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

void set_thread_limit(unsigned threads) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  g_thread_limit = threads;
}

unsigned thread_limit() { return g_thread_limit; }

void parallel_for_blocks(std::size_t count, std::size_t block,
                         const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  if (count == 0) return;
  block = std::max<std::size_t>(block, 1);
  const std::size_t blocks = block_count(count, block);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_limit(), blocks));
  auto run = [&](std::size_t b) {
    const std::size_t begin = b * block;
    body(b, begin, std::min(count, begin + block));
  };
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t b = next++; b < blocks; b = next++) run(b);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace tdesign
