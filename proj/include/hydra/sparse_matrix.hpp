#pragma once

// Compressed sparse column storage for the n-by-d design matrix. Coordinate
// updates touch single columns, so only column access is provided; row
// statistics are computed in one pass over the stored row indices.

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hydra/common.hpp"

namespace hydra {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;

  // Validates and compresses a triplet list. Rejects out-of-range indices,
  // duplicate (row, col) pairs and explicitly stored zeros, so structural
  // nonzero counts always equal numeric ones.
  static SparseMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                    std::vector<Triplet> entries) {
    for (const Triplet& t : entries) {
      require(t.row < n_rows, "matrix entry row index out of range");
      require(t.col < n_cols, "matrix entry column index out of range");
      require_finite(t.value, "matrix entry value");
      if (t.value == 0.0)
        throw ValidationError("explicitly stored zero at (" + std::to_string(t.row) + ", " +
                              std::to_string(t.col) + ")");
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    for (std::size_t k = 1; k < entries.size(); ++k) {
      if (entries[k].col == entries[k - 1].col && entries[k].row == entries[k - 1].row)
        throw ValidationError("duplicate entry at (" + std::to_string(entries[k].row) + ", " +
                              std::to_string(entries[k].col) + ")");
    }
    SparseMatrix m;
    m.n_rows_ = n_rows;
    m.n_cols_ = n_cols;
    m.col_ptr_.assign(n_cols + 1, 0);
    m.row_idx_.reserve(entries.size());
    m.values_.reserve(entries.size());
    for (const Triplet& t : entries) {
      ++m.col_ptr_[t.col + 1];
      m.row_idx_.push_back(t.row);
      m.values_.push_back(t.value);
    }
    for (std::size_t j = 0; j < n_cols; ++j) m.col_ptr_[j + 1] += m.col_ptr_[j];
    return m;
  }

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> col_rows(std::size_t j) const {
    return {row_idx_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::span<const double> col_values(std::size_t j) const {
    return {values_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::size_t col_nnz(std::size_t j) const { return col_ptr_[j + 1] - col_ptr_[j]; }

  double col_sq_norm(std::size_t j) const {
    double s = 0.0;
    for (double v : col_values(j)) s += v * v;
    return s;
  }

  // y += scale * A[:, j]
  void add_scaled_col(std::size_t j, double scale, std::span<double> y) const {
    const auto rows = col_rows(j);
    const auto vals = col_values(j);
    for (std::size_t k = 0; k < rows.size(); ++k) y[rows[k]] += scale * vals[k];
  }

  // dot(A[:, j], y)
  double col_dot(std::size_t j, std::span<const double> y) const {
    const auto rows = col_rows(j);
    const auto vals = col_values(j);
    double s = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) s += vals[k] * y[rows[k]];
    return s;
  }

  std::vector<Triplet> to_triplets() const {
    std::vector<Triplet> out;
    out.reserve(nnz());
    for (std::size_t j = 0; j < n_cols_; ++j) {
      const auto rows = col_rows(j);
      const auto vals = col_values(j);
      for (std::size_t k = 0; k < rows.size(); ++k) out.push_back({rows[k], j, vals[k]});
    }
    return out;
  }

  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
    return a.n_rows_ == b.n_rows_ && a.n_cols_ == b.n_cols_ && a.col_ptr_ == b.col_ptr_ &&
           a.row_idx_ == b.row_idx_ && a.values_ == b.values_;
  }

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> col_ptr_;  // length d+1, monotone
  std::vector<std::size_t> row_idx_;  // strictly increasing within a column
  std::vector<double> values_;
};

inline std::vector<std::size_t> nnz_per_row(const SparseMatrix& a) {
  std::vector<std::size_t> counts(a.rows(), 0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t r : a.col_rows(j)) ++counts[r];
  return counts;
}

}  // namespace hydra
