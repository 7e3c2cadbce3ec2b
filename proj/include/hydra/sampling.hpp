#pragma once

// tau-distributed sampling: each node independently draws a uniform
// tau-subset of its own block. Draws are pure functions of the counter key
// (seed, node, iteration), so any iteration replays in isolation and
// per-node streams need no coordination.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "hydra/common.hpp"
#include "hydra/partition.hpp"

namespace hydra {

// SplitMix64 stream; cheap, stateless to seed, and good enough that the
// empirical pair-frequency tests pass comfortably.
struct SplitMix64 {
  std::uint64_t state = 0;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Unbiased draw from {0, ..., n-1} by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0ull - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t node, std::uint64_t iteration) {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ull);
  h = mix64(h ^ (node + 0x9e3779b97f4a7c15ull));
  h = mix64(h ^ (iteration + 0x9e3779b97f4a7c15ull));
  return h;
}

class SamplingPlan {
 public:
  SamplingPlan(Partition partition, std::size_t tau, std::uint64_t seed)
      : partition_(std::move(partition)), tau_(tau), seed_(seed) {
    require(tau_ >= 1 && tau_ <= partition_.block_size(),
            "tau must satisfy 1 <= tau <= block size");
  }

  const Partition& partition() const { return partition_; }
  std::size_t tau() const { return tau_; }
  std::uint64_t seed() const { return seed_; }

  // Sorted uniform tau-subset of block `node`. Partial Fisher-Yates over the
  // block gives exact uniformity over all C(s, tau) subsets.
  std::vector<std::size_t> draw(std::size_t node, std::uint64_t iteration) const {
    require(node < partition_.node_count(), "node id out of range");
    const auto block = partition_.block(node);
    const std::size_t s = block.size();
    std::vector<std::size_t> pool(block.begin(), block.end());
    SplitMix64 rng{stream_key(seed_, node, iteration)};
    for (std::size_t j = 0; j < tau_; ++j) {
      const std::size_t r = j + static_cast<std::size_t>(rng.below(s - j));
      std::swap(pool[j], pool[r]);
    }
    pool.resize(tau_);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  // P(i in S and j in S) for the union sampling S; Appendix inclusion table.
  double inclusion_prob(std::size_t i, std::size_t j) const {
    const double s = static_cast<double>(partition_.block_size());
    const double t = static_cast<double>(tau_);
    if (i == j) return t / s;
    if (partition_.owner_of(i) == partition_.owner_of(j)) {
      if (partition_.block_size() == 1) return 0.0;  // unreachable: singleton blocks
      return t * (t - 1.0) / (s * (s - 1.0));
    }
    return (t / s) * (t / s);
  }

 private:
  Partition partition_;
  std::size_t tau_ = 1;
  std::uint64_t seed_ = 0;
};

}  // namespace hydra
