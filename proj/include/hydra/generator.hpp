#pragma once

// Synthetic problems: block-angular sparse matrices (diagonal per-node local
// blocks plus a shared global row band) and LASSO / elastic-net instances
// shipped with a certified optimum. The construction fixes a residual g*
// first and rescales columns until the subgradient optimality conditions
//     A[:,i]^T g* = -lambda sign(x*_i) - l2 x*_i   on the support,
//     |A[:,i]^T g*| <= nu_i lambda < lambda        off the support,
// hold exactly; the numeric certificate check, not the construction, is
// normative, and failing instances are regenerated from a sub-seed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "hydra/common.hpp"
#include "hydra/sampling.hpp"
#include "hydra/sparse_matrix.hpp"

namespace hydra {

struct GeneratorSpec {
  std::size_t nodes = 1;             // c
  std::size_t local_rows = 1;        // rows of each diagonal block
  std::size_t global_rows = 0;       // rows of the coupling band
  std::size_t cols_per_block = 1;    // s, so d = nodes * cols_per_block
  std::size_t nnz_per_local_row = 1;
  std::size_t nnz_per_global_row = 1;
  double lambda = 1.0;               // L1 weight
  double l2_weight = 0.0;            // > 0 gives an elastic-net instance
  std::size_t support_size = 0;      // nonzeros of x*
  std::uint64_t seed = 0;

  std::size_t dim() const { return nodes * cols_per_block; }
  std::size_t rows() const { return nodes * local_rows + global_rows; }
};

namespace detail {

// Gaussian via Box-Muller; the generator does not need high-end randomness,
// only reproducibility from the seed.
inline double normal(SplitMix64& rng) {
  double u1 = rng.uniform();
  while (u1 <= 0.0) u1 = rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

// Value bounded away from zero so no explicit zeros are ever stored.
inline double nonzero_value(SplitMix64& rng) {
  const double mag = 0.1 + 0.9 * rng.uniform();
  return rng.next() & 1 ? mag : -mag;
}

// k distinct values from {0, ..., n-1}, uniform, by partial Fisher-Yates.
inline std::vector<std::size_t> sample_without_replacement(std::size_t k, std::size_t n,
                                                           SplitMix64& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t r = j + static_cast<std::size_t>(rng.below(n - j));
    std::swap(pool[j], pool[r]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace detail

inline void validate_generator_spec(const GeneratorSpec& spec) {
  require(spec.nodes >= 1 && spec.cols_per_block >= 1 && spec.local_rows >= 1,
          "generator counts must be at least 1");
  require(spec.nnz_per_local_row >= 1 &&
              (spec.global_rows == 0 || spec.nnz_per_global_row >= 1),
          "row densities must be at least 1");
  require(spec.nnz_per_local_row <= spec.cols_per_block,
          "local row density exceeds the block width");
  require(spec.global_rows == 0 || spec.nnz_per_global_row <= spec.dim(),
          "global row density exceeds the matrix width");
  require(spec.local_rows * spec.nnz_per_local_row >= spec.cols_per_block,
          "local rows too sparse to cover every column of the block");
  require(spec.support_size <= spec.dim(), "support size exceeds the dimension");
  require(spec.lambda > 0.0, "lambda must be positive");
  require(spec.l2_weight >= 0.0, "l2 weight must be nonnegative");
}

// Nonzeros only inside the diagonal local blocks and the bottom global band;
// every row carries exactly its requested density and no column is empty.
inline SparseMatrix gen_block_angular(const GeneratorSpec& spec) {
  validate_generator_spec(spec);
  const std::size_t c = spec.nodes;
  const std::size_t s = spec.cols_per_block;
  const std::size_t d = spec.dim();
  std::vector<Triplet> entries;
  entries.reserve(c * spec.local_rows * spec.nnz_per_local_row +
                  spec.global_rows * spec.nnz_per_global_row);

  for (std::size_t l = 0; l < c; ++l) {
    SplitMix64 rng{stream_key(spec.seed, 0xb10cull, l)};
    // Deal a shuffled copy of the block's columns round-robin over its local
    // rows: guarantees coverage before the rows are topped up to density.
    std::vector<std::size_t> shuffled = detail::sample_without_replacement(s, s, rng);
    std::vector<std::vector<std::size_t>> row_cols(spec.local_rows);
    for (std::size_t k = 0; k < s; ++k) row_cols[k % spec.local_rows].push_back(shuffled[k]);
    for (std::size_t r = 0; r < spec.local_rows; ++r) {
      auto& cols = row_cols[r];
      require(cols.size() <= spec.nnz_per_local_row,
              "local rows too sparse to cover every column of the block");
      if (cols.size() < spec.nnz_per_local_row) {
        std::vector<std::size_t> rest;
        rest.reserve(s - cols.size());
        std::vector<char> used(s, 0);
        for (std::size_t j : cols) used[j] = 1;
        for (std::size_t j = 0; j < s; ++j)
          if (!used[j]) rest.push_back(j);
        for (std::size_t need = spec.nnz_per_local_row - cols.size(); need > 0; --need) {
          const std::size_t pick = static_cast<std::size_t>(rng.below(rest.size()));
          cols.push_back(rest[pick]);
          rest[pick] = rest.back();
          rest.pop_back();
        }
      }
      const std::size_t row = l * spec.local_rows + r;
      for (std::size_t j : cols)
        entries.push_back({row, l * s + j, detail::nonzero_value(rng)});
    }
  }

  SplitMix64 grng{stream_key(spec.seed, 0x910bull, 0)};
  for (std::size_t r = 0; r < spec.global_rows; ++r) {
    const std::size_t row = c * spec.local_rows + r;
    for (std::size_t j : detail::sample_without_replacement(spec.nnz_per_global_row, d, grng))
      entries.push_back({row, j, detail::nonzero_value(grng)});
  }
  return SparseMatrix::from_triplets(spec.rows(), d, std::move(entries));
}

struct CertifiedInstance {
  SparseMatrix A;
  std::vector<double> y;
  double lambda = 1.0;
  double l2_weight = 0.0;
  std::vector<double> x_star;
  std::vector<double> g_star;  // A x* - y
  double optimal_value = 0.0;
};

// Max violation of the subgradient optimality conditions of
// (1/2)||Ax-y||^2 + lambda ||x||_1 + (l2/2)||x||^2 at x*. Zero means exact.
inline double certificate_violation(const SparseMatrix& a, std::span<const double> y,
                                    std::span<const double> x_star, double lambda,
                                    double l2_weight = 0.0) {
  require(x_star.size() == a.cols() && y.size() == a.rows(), "certificate dimension mismatch");
  std::vector<double> g(a.rows());
  for (std::size_t r = 0; r < g.size(); ++r) g[r] = -y[r];
  for (std::size_t i = 0; i < a.cols(); ++i)
    if (x_star[i] != 0.0) a.add_scaled_col(i, x_star[i], g);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.cols(); ++i) {
    const double t = a.col_dot(i, g) + l2_weight * x_star[i];
    if (x_star[i] != 0.0)
      worst = std::max(worst, std::abs(t + lambda * (x_star[i] > 0.0 ? 1.0 : -1.0)));
    else
      worst = std::max(worst, std::max(0.0, std::abs(t) - lambda));
  }
  return worst;
}

inline double l1_objective(const SparseMatrix& a, std::span<const double> y,
                           std::span<const double> x, double lambda, double l2_weight = 0.0) {
  std::vector<double> g(a.rows());
  for (std::size_t r = 0; r < g.size(); ++r) g[r] = -y[r];
  for (std::size_t i = 0; i < a.cols(); ++i)
    if (x[i] != 0.0) a.add_scaled_col(i, x[i], g);
  double v = 0.0;
  for (double gr : g) v += gr * gr;
  v *= 0.5;
  for (double xi : x) v += lambda * std::abs(xi) + 0.5 * l2_weight * xi * xi;
  return v;
}

inline CertifiedInstance gen_lasso_certified(const GeneratorSpec& spec) {
  validate_generator_spec(spec);
  const std::size_t d = spec.dim();
  const std::size_t n = spec.rows();

  std::string failure;
  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    GeneratorSpec sub = spec;
    sub.seed = attempt == 0 ? spec.seed : mix64(spec.seed + attempt);
    SparseMatrix a = gen_block_angular(sub);

    SplitMix64 rng{stream_key(sub.seed, 0xce27ull, 0)};
    std::vector<double> g_star(n);
    for (double& v : g_star) v = detail::normal(rng);

    auto support = detail::sample_without_replacement(spec.support_size, d, rng);
    std::sort(support.begin(), support.end());
    std::vector<char> on_support(d, 0);
    for (std::size_t i : support) on_support[i] = 1;
    std::vector<double> x_star(d, 0.0);
    for (std::size_t i : support) {
      const double sign = rng.next() & 1 ? 1.0 : -1.0;
      x_star[i] = sign * (0.5 + 1.5 * rng.uniform());
    }

    // Rescale columns so the gradient conditions hold exactly for g*.
    bool degenerate = false;
    std::vector<Triplet> scaled = a.to_triplets();
    std::vector<double> factor(d, 1.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double t = a.col_dot(i, g_star);
      if (on_support[i]) {
        const double target = -spec.lambda * (x_star[i] > 0.0 ? 1.0 : -1.0) -
                              spec.l2_weight * x_star[i];
        if (std::abs(t) < 1e-12 * std::sqrt(a.col_sq_norm(i))) {
          degenerate = true;  // column nearly orthogonal to g*, retry
          break;
        }
        factor[i] = target / t;
      } else {
        const double nu = rng.uniform(0.1, 0.9);
        if (t != 0.0) factor[i] = nu * spec.lambda / std::abs(t);
      }
    }
    if (degenerate) {
      failure = "support column orthogonal to the residual direction";
      continue;
    }
    for (Triplet& e : scaled) e.value *= factor[e.col];
    SparseMatrix a2 = SparseMatrix::from_triplets(n, d, std::move(scaled));

    // y = A x* - g*, so the residual at x* is exactly g*.
    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) y[r] = -g_star[r];
    for (std::size_t i : support) a2.add_scaled_col(i, x_star[i], y);

    CertifiedInstance inst;
    inst.lambda = spec.lambda;
    inst.l2_weight = spec.l2_weight;
    double sq = 0.0, l1 = 0.0, l2 = 0.0;
    for (double v : g_star) sq += v * v;
    for (double v : x_star) {
      l1 += std::abs(v);
      l2 += v * v;
    }
    inst.optimal_value = 0.5 * sq + spec.lambda * l1 + 0.5 * spec.l2_weight * l2;
    inst.A = std::move(a2);
    inst.y = std::move(y);
    inst.x_star = std::move(x_star);
    inst.g_star = std::move(g_star);

    const double violation =
        certificate_violation(inst.A, inst.y, inst.x_star, inst.lambda, inst.l2_weight);
    const double recomputed =
        l1_objective(inst.A, inst.y, inst.x_star, inst.lambda, inst.l2_weight);
    if (violation <= 1e-8 &&
        std::abs(recomputed - inst.optimal_value) <= 1e-12 * (1.0 + std::abs(inst.optimal_value)))
      return inst;
    failure = "certificate violation " + format_double(violation);
  }
  throw Error("certified instance generation failed after 10 attempts: " + failure);
}

}  // namespace hydra
