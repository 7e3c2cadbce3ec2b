#pragma once

#include <optional>
#include <vector>

#include "hydra/common.hpp"
#include "hydra/loss.hpp"
#include "hydra/regularizer.hpp"
#include "hydra/sparse_matrix.hpp"

namespace hydra {

struct ProblemInstance {
  SparseMatrix A;
  std::vector<double> y;
  LossKind loss = LossKind::SquareLoss;
  SeparableReg reg;
  std::optional<double> optimal_value;          // L*, when certified
  std::optional<std::vector<double>> optimum;   // x*, when certified
};

// Rejects dimension mismatches, zero labels for the margin losses, and zero
// columns (M_ii sits in the prox denominator).
inline void validate_problem(const ProblemInstance& p) {
  require(p.A.rows() >= 1 && p.A.cols() >= 1, "empty design matrix");
  require(p.y.size() == p.A.rows(), "label vector length must match matrix rows");
  require(p.reg.dim() == p.A.cols(), "regularizer dimension must match matrix columns");
  if (p.loss != LossKind::SquareLoss)
    for (std::size_t r = 0; r < p.y.size(); ++r)
      require(p.y[r] != 0.0, "label " + std::to_string(r) + " must be nonzero");
  for (std::size_t i = 0; i < p.A.cols(); ++i)
    require(p.A.col_nnz(i) > 0, "zero column " + std::to_string(i) +
                                    " cannot participate in optimization");
  if (p.optimum) require(p.optimum->size() == p.A.cols(), "optimum dimension mismatch");
}

}  // namespace hydra
