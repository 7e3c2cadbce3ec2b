#pragma once

// Balanced assignment of the d coordinates to c nodes. Blocks are disjoint,
// cover {0..d-1} and have cardinality exactly s = d/c each.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "hydra/common.hpp"
#include "hydra/sparse_matrix.hpp"

namespace hydra {

class Partition {
 public:
  Partition() = default;

  // Block l = {l*s, ..., (l+1)*s - 1}.
  static Partition contiguous(std::size_t d, std::size_t c) {
    require(c >= 1, "partition needs at least one node");
    require(d >= 1, "partition needs at least one coordinate");
    if (d % c != 0)
      throw ValidationError("node count " + std::to_string(c) + " does not divide dimension " +
                            std::to_string(d));
    Partition p;
    p.c_ = c;
    p.s_ = d / c;
    p.owner_.resize(d);
    p.coords_.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      p.owner_[i] = i / p.s_;
      p.coords_[i] = i;
    }
    return p;
  }

  // owner[i] is the node id of coordinate i; node ids must be 0..c-1 with
  // every node owning exactly d/c coordinates.
  static Partition from_assignment(std::vector<std::size_t> owner) {
    require(!owner.empty(), "empty partition assignment");
    const std::size_t d = owner.size();
    const std::size_t c = 1 + *std::max_element(owner.begin(), owner.end());
    if (d % c != 0)
      throw ValidationError("unbalanced partition: " + std::to_string(c) +
                            " nodes do not divide dimension " + std::to_string(d));
    const std::size_t s = d / c;
    std::vector<std::size_t> counts(c, 0);
    for (std::size_t l : owner) ++counts[l];
    for (std::size_t l = 0; l < c; ++l)
      if (counts[l] != s)
        throw ValidationError("unbalanced partition: node " + std::to_string(l) + " owns " +
                              std::to_string(counts[l]) + " coordinates, expected " +
                              std::to_string(s));
    Partition p;
    p.c_ = c;
    p.s_ = s;
    p.owner_ = std::move(owner);
    p.coords_.resize(d);
    std::vector<std::size_t> fill(c, 0);
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t l = p.owner_[i];
      p.coords_[l * s + fill[l]++] = i;  // ascending within each block
    }
    return p;
  }

  std::size_t dim() const { return owner_.size(); }
  std::size_t node_count() const { return c_; }
  std::size_t block_size() const { return s_; }

  std::size_t owner_of(std::size_t i) const { return owner_[i]; }

  // Sorted coordinate list of node l.
  std::span<const std::size_t> block(std::size_t l) const {
    return {coords_.data() + l * s_, s_};
  }

  std::span<const std::size_t> assignment() const { return owner_; }

  friend bool operator==(const Partition& a, const Partition& b) {
    return a.owner_ == b.owner_;
  }

 private:
  std::size_t c_ = 0;
  std::size_t s_ = 0;
  std::vector<std::size_t> owner_;   // coordinate -> node
  std::vector<std::size_t> coords_;  // blocks back to back, ascending within each
};

// Number of distinct blocks with at least one nonzero in each row.
inline std::vector<std::size_t> blocks_per_row(const SparseMatrix& a, const Partition& p) {
  require(p.dim() == a.cols(), "partition does not cover the matrix columns");
  std::vector<std::size_t> counts(a.rows(), 0);
  std::vector<std::size_t> seen(a.rows(), 0);  // 1 + id of last block seen per row
  for (std::size_t l = 0; l < p.node_count(); ++l) {
    for (std::size_t j : p.block(l)) {
      for (std::size_t r : a.col_rows(j)) {
        if (seen[r] != l + 1) {
          seen[r] = l + 1;
          ++counts[r];
        }
      }
    }
  }
  return counts;
}

}  // namespace hydra
