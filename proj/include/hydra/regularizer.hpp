#pragma once

// Separable regularizers R(x) = sum_i R_i(x^i) and the exact minimizer of the
// one-dimensional coordinate subproblem
//     h = argmin_t  f'_i(x) t + (M_ii beta / 2) t^2 + R_i(x^i + t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "hydra/common.hpp"

namespace hydra {

enum class RegKind { Zero, L1, L2, ElasticNet, Box };

inline const char* to_string(RegKind k) {
  switch (k) {
    case RegKind::Zero: return "zero";
    case RegKind::L1: return "l1";
    case RegKind::L2: return "l2";
    case RegKind::ElasticNet: return "elastic-net";
    case RegKind::Box: return "box";
  }
  return "?";
}

class SeparableReg {
 public:
  SeparableReg() = default;

  static SeparableReg zero(std::size_t d) { return SeparableReg(RegKind::Zero, d); }

  static SeparableReg l1(std::size_t d, double lambda) {
    require(lambda >= 0.0, "l1 weight must be nonnegative");
    SeparableReg r(RegKind::L1, d);
    r.uniform_l1_ = lambda;
    return r;
  }

  static SeparableReg l1(std::vector<double> lambdas) {
    for (double v : lambdas) require(v >= 0.0, "l1 weight must be nonnegative");
    SeparableReg r(RegKind::L1, lambdas.size());
    r.l1_ = std::move(lambdas);
    return r;
  }

  static SeparableReg l2(std::size_t d, double lambda) {
    require(lambda > 0.0, "l2 weight must be positive");
    SeparableReg r(RegKind::L2, d);
    r.uniform_l2_ = lambda;
    return r;
  }

  static SeparableReg l2(std::vector<double> lambdas) {
    for (double v : lambdas) require(v > 0.0, "l2 weight must be positive");
    SeparableReg r(RegKind::L2, lambdas.size());
    r.l2_ = std::move(lambdas);
    return r;
  }

  static SeparableReg elastic_net(std::size_t d, double l1_weight, double l2_weight) {
    require(l1_weight >= 0.0, "l1 weight must be nonnegative");
    require(l2_weight > 0.0, "l2 weight must be positive");
    SeparableReg r(RegKind::ElasticNet, d);
    r.uniform_l1_ = l1_weight;
    r.uniform_l2_ = l2_weight;
    return r;
  }

  static SeparableReg box(std::size_t d, double lo, double hi) {
    require(lo <= hi, "box bounds must satisfy lo <= hi");
    SeparableReg r(RegKind::Box, d);
    r.lo_ = lo;
    r.hi_ = hi;
    return r;
  }

  RegKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }

  double l1_weight(std::size_t i) const {
    if (kind_ != RegKind::L1 && kind_ != RegKind::ElasticNet) return 0.0;
    return l1_.empty() ? uniform_l1_ : l1_[i];
  }
  double l2_weight(std::size_t i) const {
    if (kind_ != RegKind::L2 && kind_ != RegKind::ElasticNet) return 0.0;
    return l2_.empty() ? uniform_l2_ : l2_[i];
  }
  double box_lo() const { return lo_; }
  double box_hi() const { return hi_; }

 private:
  SeparableReg(RegKind kind, std::size_t d) : kind_(kind), dim_(d) {}

  RegKind kind_ = RegKind::Zero;
  std::size_t dim_ = 0;
  std::vector<double> l1_, l2_;  // per-coordinate, empty means uniform
  double uniform_l1_ = 0.0, uniform_l2_ = 0.0;
  double lo_ = 0.0, hi_ = 0.0;
};

inline double coord_reg_value(double x_i, std::size_t i, const SeparableReg& reg) {
  switch (reg.kind()) {
    case RegKind::Zero: return 0.0;
    case RegKind::L1: return reg.l1_weight(i) * std::abs(x_i);
    case RegKind::L2: return 0.5 * reg.l2_weight(i) * x_i * x_i;
    case RegKind::ElasticNet:
      return reg.l1_weight(i) * std::abs(x_i) + 0.5 * reg.l2_weight(i) * x_i * x_i;
    case RegKind::Box:
      return (x_i < reg.box_lo() || x_i > reg.box_hi())
                 ? std::numeric_limits<double>::infinity()
                 : 0.0;
  }
  return 0.0;
}

inline double reg_value(std::span<const double> x, const SeparableReg& reg) {
  require(x.size() == reg.dim(), "regularizer dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += coord_reg_value(x[i], i, reg);
  return s;
}

// Exact global minimizer of the coordinate subproblem. For the weighted L1
// case this is the point of [(-l-f')/(Mb), (l-f')/(Mb)] closest to -x_i; the
// elastic-net form reduces to it at l2 = 0 and to the weighted L2 stationary
// point -(f' + l2 x_i)/(Mb + l2) at l1 = 0.
inline double prox_step(std::size_t i, double fprime, double m_ii, double beta, double x_i,
                        const SeparableReg& reg) {
  require_finite(fprime, "f'_i");
  require_finite(m_ii, "M_ii");
  require_finite(beta, "beta");
  require_finite(x_i, "x_i");
  require(m_ii > 0.0 && beta > 0.0, "prox needs M_ii > 0 and beta > 0");
  const double mb = m_ii * beta;
  switch (reg.kind()) {
    case RegKind::Zero:
      return -fprime / mb;
    case RegKind::L1: {
      const double l = reg.l1_weight(i);
      return std::clamp(-x_i, (-l - fprime) / mb, (l - fprime) / mb);
    }
    case RegKind::L2: {
      const double l = reg.l2_weight(i);
      return -(fprime + l * x_i) / (mb + l);
    }
    case RegKind::ElasticNet: {
      const double l1 = reg.l1_weight(i);
      const double l2 = reg.l2_weight(i);
      // target point in u = x_i + t coordinates: soft threshold
      const double z = mb * x_i - fprime;
      const double u = z > l1 ? (z - l1) / (mb + l2) : (z < -l1 ? (z + l1) / (mb + l2) : 0.0);
      return u - x_i;
    }
    case RegKind::Box: {
      require(x_i >= reg.box_lo() && x_i <= reg.box_hi(), "x_i outside the box");
      return std::clamp(-fprime / mb, reg.box_lo() - x_i, reg.box_hi() - x_i);
    }
  }
  return 0.0;
}

}  // namespace hydra
