#pragma once

// Smooth losses over linear predictions: square (SL), logistic (LL) and
// square hinge (HL). All partial derivatives are computed from the maintained
// residual vector
//     g = A x - y            for SL,
//     g = -Diag(y) A x       for LL and HL,
// which is the only per-node state that has to be kept in sync. The diagonal
// curvature is M_ii = ||A[:,i]||^2 for SL/HL and (1/4)||A[:,i]||^2 for LL.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hydra/common.hpp"
#include "hydra/sparse_matrix.hpp"

namespace hydra {

enum class LossKind { SquareLoss, LogisticLoss, SquareHingeLoss };

inline const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::SquareLoss: return "square";
    case LossKind::LogisticLoss: return "logistic";
    case LossKind::SquareHingeLoss: return "square-hinge";
  }
  return "?";
}

inline LossKind loss_from_string(const std::string& s) {
  if (s == "square" || s == "sl") return LossKind::SquareLoss;
  if (s == "logistic" || s == "ll") return LossKind::LogisticLoss;
  if (s == "square-hinge" || s == "hl") return LossKind::SquareHingeLoss;
  throw ValidationError("unknown loss kind: " + s);
}

// exp(t) / (1 + exp(t)) without overflow at large |t|.
inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow at large |t|.
inline double log1p_exp(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

inline std::vector<double> m_diag(const SparseMatrix& a, LossKind kind) {
  const double scale = kind == LossKind::LogisticLoss ? 0.25 : 1.0;
  std::vector<double> m(a.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    m[i] = scale * a.col_sq_norm(i);
    if (m[i] <= 0.0)
      throw ValidationError("zero column " + std::to_string(i) +
                            ": coordinate has no curvature");
  }
  return m;
}

struct Residual {
  std::vector<double> g;
  LossKind kind = LossKind::SquareLoss;
};

inline Residual init_residual(const SparseMatrix& a, std::span<const double> x,
                              std::span<const double> y, LossKind kind) {
  require(x.size() == a.cols(), "x dimension mismatch");
  require(y.size() == a.rows(), "y dimension mismatch");
  std::vector<double> z(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j)
    if (x[j] != 0.0) a.add_scaled_col(j, x[j], z);
  if (kind == LossKind::SquareLoss) {
    for (std::size_t r = 0; r < z.size(); ++r) z[r] -= y[r];
  } else {
    for (std::size_t r = 0; r < z.size(); ++r) {
      require(y[r] != 0.0, "label " + std::to_string(r) + " must be nonzero");
      z[r] = -y[r] * z[r];
    }
  }
  return {std::move(z), kind};
}

// i-th partial derivative of f at the point the residual was built for.
// These agree with the direct-in-x formulas (the ground truth); note the
// hinge active set is strict: rows with g^j = -1 contribute nothing.
inline double partial_derivative(std::size_t i, std::span<const double> g, LossKind kind,
                                 const SparseMatrix& a, std::span<const double> y) {
  const auto rows = a.col_rows(i);
  const auto vals = a.col_values(i);
  double s = 0.0;
  switch (kind) {
    case LossKind::SquareLoss:
      for (std::size_t k = 0; k < rows.size(); ++k) s += vals[k] * g[rows[k]];
      break;
    case LossKind::LogisticLoss:
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::size_t r = rows[k];
        s -= y[r] * vals[k] * sigmoid(g[r]);
      }
      break;
    case LossKind::SquareHingeLoss:
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::size_t r = rows[k];
        if (g[r] > -1.0) s -= y[r] * vals[k] * (1.0 + g[r]);
      }
      break;
  }
  return s;
}

inline double partial_derivative(std::size_t i, const Residual& res, const SparseMatrix& a,
                                 std::span<const double> y) {
  return partial_derivative(i, res.g, res.kind, a, y);
}

struct CoordUpdate {
  std::size_t index = 0;
  double step = 0.0;
};

// out += residual change caused by the coordinate steps. Adding this to g
// restores the residual invariant for the updated x.
inline void accumulate_delta_g(std::span<const CoordUpdate> updates, const SparseMatrix& a,
                               std::span<const double> y, LossKind kind, std::span<double> out) {
  for (const CoordUpdate& u : updates) {
    require_finite(u.step, "coordinate step");
    if (kind == LossKind::SquareLoss) {
      a.add_scaled_col(u.index, u.step, out);
    } else {
      const auto rows = a.col_rows(u.index);
      const auto vals = a.col_values(u.index);
      for (std::size_t k = 0; k < rows.size(); ++k)
        out[rows[k]] -= u.step * y[rows[k]] * vals[k];
    }
  }
}

inline std::vector<double> delta_g(std::span<const CoordUpdate> updates, const SparseMatrix& a,
                                   std::span<const double> y, LossKind kind) {
  std::vector<double> out(a.rows(), 0.0);
  accumulate_delta_g(updates, a, y, kind, out);
  return out;
}

inline double loss_value(std::span<const double> g, LossKind kind) {
  double s = 0.0;
  switch (kind) {
    case LossKind::SquareLoss:
      for (double v : g) s += v * v;
      return 0.5 * s;
    case LossKind::LogisticLoss:
      for (double v : g) s += log1p_exp(v);
      return s;
    case LossKind::SquareHingeLoss:
      for (double v : g) {
        const double t = 1.0 + v;
        if (t > 0.0) s += t * t;
      }
      return 0.5 * s;
  }
  return s;
}

inline double loss_value(const Residual& res) { return loss_value(res.g, res.kind); }

}  // namespace hydra
