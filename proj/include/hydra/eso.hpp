#pragma once

// Stepsize theory: the sparsity bounds omega / omega', the spectral
// quantities sigma / sigma' of Q = (D^M)^{-1/2} M (D^M)^{-1/2}, the safe
// stepsize beta* = beta1* + beta2*, the sampling expectation identity, and
// the strong-convexity iteration bound. Q is invariant to the global scalar
// in M (the 1/4 of the logistic loss cancels), so everything here is computed
// from A and its column norms alone.
//
// sigma is estimated matrix-free by power iteration; exact sigma' (and exact
// sigma, via the singleton partition) go through a dense eigen oracle and are
// meant for desk-scale analysis and tests only.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hydra/common.hpp"
#include "hydra/partition.hpp"
#include "hydra/regularizer.hpp"
#include "hydra/sampling.hpp"
#include "hydra/sparse_matrix.hpp"

namespace hydra {

// omega: max number of nonzeros in a row of A.
inline std::size_t omega(const SparseMatrix& a) {
  const auto counts = nnz_per_row(a);
  std::size_t w = 0;
  for (std::size_t c : counts) w = std::max(w, c);
  return w;
}

// omega': max number of blocks with a nonzero in a row of A.
inline std::size_t omega_prime(const SparseMatrix& a, const Partition& p) {
  const auto counts = blocks_per_row(a, p);
  std::size_t w = 0;
  for (std::size_t c : counts) w = std::max(w, c);
  return w;
}

inline std::vector<double> inv_col_norms(const SparseMatrix& a) {
  std::vector<double> inv(a.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    const double nsq = a.col_sq_norm(i);
    if (nsq <= 0.0)
      throw ValidationError("zero column " + std::to_string(i) + " in spectral analysis");
    inv[i] = 1.0 / std::sqrt(nsq);
  }
  return inv;
}

struct PowerIterationResult {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Largest eigenvalue of Q by power iteration on v -> D^{-1/2} A^T (A D^{-1/2} v).
// Stops when |l_{t+1} - l_t| <= tol * l_{t+1}; the Rayleigh quotient makes the
// returned value a lower bound on the true sigma.
inline PowerIterationResult sigma_power(const SparseMatrix& a, double tol = 1e-6,
                                        std::size_t max_iter = 5000, std::uint64_t seed = 0) {
  require(tol > 0.0, "tolerance must be positive");
  require(max_iter >= 2, "max_iter must be at least 2");
  const std::size_t d = a.cols();
  const std::size_t n = a.rows();
  const std::vector<double> inv = inv_col_norms(a);

  SplitMix64 rng{stream_key(seed, 0x5eed, 0x51f)};
  std::vector<double> v(d);
  for (double& vi : v) vi = rng.uniform(-1.0, 1.0);

  std::vector<double> z(n), u(d);
  auto apply_q = [&](const std::vector<double>& in, std::vector<double>& out) {
    std::fill(z.begin(), z.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) a.add_scaled_col(i, in[i] * inv[i], z);
    for (std::size_t i = 0; i < d; ++i) out[i] = a.col_dot(i, z) * inv[i];
  };
  auto normalize = [](std::vector<double>& w) {
    double nrm = 0.0;
    for (double wi : w) nrm += wi * wi;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return false;
    for (double& wi : w) wi /= nrm;
    return true;
  };
  if (!normalize(v)) v[0] = 1.0;

  double lambda_prev = 0.0;
  for (std::size_t t = 1; t <= max_iter; ++t) {
    apply_q(v, u);
    double lambda = 0.0;  // v^T Q v with ||v|| = 1
    for (std::size_t i = 0; i < d; ++i) lambda += v[i] * u[i];
    if (t >= 2 && std::abs(lambda - lambda_prev) <= tol * std::abs(lambda))
      return {lambda, t, true};
    lambda_prev = lambda;
    v = u;
    if (!normalize(v)) {
      // start vector fell into the null space; reseed and continue
      for (double& vi : v) vi = rng.uniform(-1.0, 1.0);
      normalize(v);
    }
  }
  return {lambda_prev, max_iter, false};
}

// Dense Q = D^{-1/2} A^T A D^{-1/2} (unit diagonal by construction).
inline Eigen::MatrixXd dense_q(const SparseMatrix& a, std::size_t dense_limit = 500) {
  const std::size_t d = a.cols();
  require(d <= dense_limit, "dimension " + std::to_string(d) +
                                " exceeds the dense oracle limit " + std::to_string(dense_limit));
  const std::vector<double> inv = inv_col_norms(a);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(d, d);
  std::vector<double> scatter(a.rows(), 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const auto rows = a.col_rows(i);
    const auto vals = a.col_values(i);
    for (std::size_t k = 0; k < rows.size(); ++k) scatter[rows[k]] = vals[k];
    for (std::size_t j = i; j < d; ++j) {
      const double dot = a.col_dot(j, scatter) * inv[i] * inv[j];
      q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dot;
      q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = dot;
    }
    for (std::size_t r : rows) scatter[r] = 0.0;
  }
  return q;
}

// Exact sigma' = max { x^T Q x : x^T B^Q x <= 1 } via the dense oracle
// lambda_max((B^Q)^{-1/2} Q (B^Q)^{-1/2}). Throws NumericError when a
// diagonal block of Q is numerically singular (sigma' is unbounded there;
// callers fall back to the omega' bound).
inline double sigma_prime_exact(const SparseMatrix& a, const Partition& p,
                                std::size_t dense_limit = 500) {
  require(p.dim() == a.cols(), "partition does not cover the matrix columns");
  const Eigen::MatrixXd q = dense_q(a, dense_limit);
  const std::size_t d = a.cols();
  const std::size_t c = p.node_count();
  const std::size_t s = p.block_size();

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);  // (B^Q)^{-1/2}, block diagonal
  for (std::size_t l = 0; l < c; ++l) {
    const auto block = p.block(l);
    Eigen::MatrixXd qll(s, s);
    for (std::size_t bi = 0; bi < s; ++bi)
      for (std::size_t bj = 0; bj < s; ++bj)
        qll(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(bj)) =
            q(static_cast<Eigen::Index>(block[bi]), static_cast<Eigen::Index>(block[bj]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qll);
    require(es.info() == Eigen::Success, "block eigendecomposition failed");
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin <= 1e-10 * std::max(1.0, lmax))
      throw NumericError("block diagonal of Q is singular on node " + std::to_string(l) +
                         "; sigma' is unbounded, use the omega' bound");
    const Eigen::VectorXd inv_sqrt = es.eigenvalues().array().rsqrt().matrix();
    const Eigen::MatrixXd wll =
        es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
    for (std::size_t bi = 0; bi < s; ++bi)
      for (std::size_t bj = 0; bj < s; ++bj)
        w(static_cast<Eigen::Index>(block[bi]), static_cast<Eigen::Index>(block[bj])) =
            wll(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(bj));
  }

  Eigen::MatrixXd m = w * q * w;
  m = 0.5 * (m + m.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  require(es.info() == Eigen::Success, "generalized eigendecomposition failed");
  return es.eigenvalues().maxCoeff();
}

struct BetaStar {
  double beta1 = 1.0;
  double beta2 = 0.0;
  double beta = 1.0;
};

// beta1* = 1 + (tau-1)(sigma-1)/s1,
// beta2* = (tau/s - (tau-1)/s1) * ((sigma'-1)/sigma') * sigma,  s1 = max(1, s-1).
inline BetaStar beta_star(std::size_t tau, std::size_t s, double sigma, double sigma_prime) {
  require(s >= 1 && tau >= 1 && tau <= s, "need 1 <= tau <= s");
  require(sigma >= 1.0, "sigma must be at least 1");
  require(sigma_prime >= 1.0, "sigma' must be at least 1");
  const double s1 = s > 1 ? static_cast<double>(s - 1) : 1.0;
  const double t = static_cast<double>(tau);
  const double beta1 = 1.0 + (t - 1.0) * (sigma - 1.0) / s1;
  const double xi = t / static_cast<double>(s) - (t - 1.0) / s1;
  const double beta2 = xi * ((sigma_prime - 1.0) / sigma_prime) * sigma;
  return {beta1, beta2, beta1 + beta2};
}

// 2*beta1*: safe without sigma' for tau >= 2 (beta2* <= beta1* there).
inline double beta_safe_doubling(std::size_t tau, std::size_t s, double sigma) {
  require(tau >= 2, "the doubling bound requires tau >= 2");
  require(tau <= s, "need tau <= s");
  require(sigma >= 1.0, "sigma must be at least 1");
  const double s1 = s > 1 ? static_cast<double>(s - 1) : 1.0;
  return 2.0 * (1.0 + (static_cast<double>(tau) - 1.0) * (sigma - 1.0) / s1);
}

// E[(x^S)^T G x^S] for the tau-distributed sampling:
// (tau/s) [ a1 x^T D^G x + a2 x^T G x + a3 x^T (G - B^G) x ],
// a1 = 1 - (tau-1)/s1, a2 = (tau-1)/s1, a3 = tau/s - (tau-1)/s1.
inline double eso_expectation_formula(const Eigen::MatrixXd& g, const Eigen::VectorXd& x,
                                      std::size_t tau, const Partition& p) {
  const std::size_t d = p.dim();
  require(static_cast<std::size_t>(g.rows()) == d && static_cast<std::size_t>(g.cols()) == d,
          "G must be d-by-d");
  require(static_cast<std::size_t>(x.size()) == d, "x must have length d");
  const std::size_t s = p.block_size();
  require(tau >= 1 && tau <= s, "need 1 <= tau <= s");
  const double s1 = s > 1 ? static_cast<double>(s - 1) : 1.0;
  const double t = static_cast<double>(tau);
  const double a1 = 1.0 - (t - 1.0) / s1;
  const double a2 = (t - 1.0) / s1;
  const double a3 = t / static_cast<double>(s) - (t - 1.0) / s1;

  double diag_form = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    diag_form += g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) * x[static_cast<Eigen::Index>(i)] * x[static_cast<Eigen::Index>(i)];
  const double full_form = x.dot(g * x);
  double block_form = 0.0;
  for (std::size_t l = 0; l < p.node_count(); ++l) {
    for (std::size_t bi : p.block(l))
      for (std::size_t bj : p.block(l))
        block_form += x[static_cast<Eigen::Index>(bi)] *
                      g(static_cast<Eigen::Index>(bi), static_cast<Eigen::Index>(bj)) *
                      x[static_cast<Eigen::Index>(bj)];
  }
  return (t / static_cast<double>(s)) *
         (a1 * diag_form + a2 * full_form + a3 * (full_form - block_form));
}

struct ConvergenceInputs {
  double mu_f = 0.0;       // strong convexity of f w.r.t. ||.||_M
  double mu_reg = 0.0;     // strong convexity of R w.r.t. ||.||_M
  double epsilon = 0.0;    // target gap
  double rho = 0.0;        // failure probability, in (0,1)
  double initial_gap = 0.0;  // L(x0) - L*
};

// T >= (d/(c tau)) * ((beta + mu_R)/(mu_f + mu_R)) * log(gap / (eps rho)),
// rounded up.
inline std::size_t theorem1_iterations(std::size_t d, std::size_t c, std::size_t tau, double beta,
                                       const ConvergenceInputs& in) {
  require(d >= 1 && c >= 1 && tau >= 1, "dimensions must be positive");
  require(beta >= 1.0, "beta must be at least 1");
  if (in.mu_f + in.mu_reg <= 0.0)
    throw ValidationError("theorem needs mu_f + mu_R > 0");
  require(in.mu_f >= 0.0 && in.mu_reg >= 0.0, "convexity moduli must be nonnegative");
  require(in.epsilon > 0.0, "epsilon must be positive");
  require(in.rho > 0.0 && in.rho < 1.0, "rho must lie in (0,1)");
  require(in.initial_gap > in.epsilon, "epsilon must be below the initial gap");
  const double lead = static_cast<double>(d) / (static_cast<double>(c) * static_cast<double>(tau));
  const double cond = (beta + in.mu_reg) / (in.mu_f + in.mu_reg);
  const double logterm = std::log(in.initial_gap / (in.epsilon * in.rho));
  return static_cast<std::size_t>(std::ceil(lead * cond * logterm));
}

// d beta* / (c tau) with d = s c; gamma_1 = s + sigma (sigma'-1)/sigma',
// gamma_s = sigma.
inline double leading_factor_gamma(std::size_t tau, std::size_t s, std::size_t c, double sigma,
                                   double sigma_prime) {
  const double d = static_cast<double>(s) * static_cast<double>(c);
  const BetaStar b = beta_star(tau, s, sigma, sigma_prime);
  return d * b.beta / (static_cast<double>(c) * static_cast<double>(tau));
}

enum class SigmaSource { ExactPowerIteration, UpperBoundOmega };
enum class SigmaPrimeSource { ExactSmallInstance, UpperBoundOmegaPrime, SkippedDoubling };

inline const char* to_string(SigmaSource s) {
  return s == SigmaSource::ExactPowerIteration ? "exact_power_iteration" : "upper_bound_omega";
}
inline const char* to_string(SigmaPrimeSource s) {
  switch (s) {
    case SigmaPrimeSource::ExactSmallInstance: return "exact_small_instance";
    case SigmaPrimeSource::UpperBoundOmegaPrime: return "upper_bound_omega_prime";
    case SigmaPrimeSource::SkippedDoubling: return "skipped_doubling";
  }
  return "?";
}

struct StepsizeInfo {
  std::size_t omega = 0;
  std::size_t omega_prime = 0;
  double sigma = 1.0;
  SigmaSource sigma_source = SigmaSource::UpperBoundOmega;
  std::optional<double> sigma_prime;  // absent when the doubling bound skipped it
  SigmaPrimeSource sigma_prime_source = SigmaPrimeSource::UpperBoundOmegaPrime;
  double beta1 = 1.0;
  double beta2 = 0.0;
  double beta = 1.0;
  std::size_t s = 0;
  std::size_t s1 = 0;
  std::size_t tau = 0;
  std::size_t c = 0;
};

enum class SigmaMode { Power, OmegaBound };
enum class SigmaPrimeMode { Auto, Exact, OmegaPrimeBound, SkipDoubling };

struct AnalyzeOptions {
  SigmaMode sigma_mode = SigmaMode::Power;
  SigmaPrimeMode sigma_prime_mode = SigmaPrimeMode::Auto;
  double tol = 1e-6;
  std::size_t max_iter = 5000;
  std::uint64_t seed = 0;
  std::size_t dense_limit = 500;
  // Power iteration returns a lower bound; inflate before using it in beta.
  bool inflate_power_sigma = true;
};

inline StepsizeInfo analyze_stepsizes(const SparseMatrix& a, const Partition& p, std::size_t tau,
                                      const AnalyzeOptions& opt = {}) {
  StepsizeInfo info;
  info.c = p.node_count();
  info.s = p.block_size();
  info.s1 = std::max<std::size_t>(1, info.s - 1);
  info.tau = tau;
  info.omega = omega(a);
  info.omega_prime = omega_prime(a, p);

  if (opt.sigma_mode == SigmaMode::Power) {
    const PowerIterationResult r = sigma_power(a, opt.tol, opt.max_iter, opt.seed);
    if (!r.converged)
      throw ConvergenceError("sigma power iteration did not converge after " +
                             std::to_string(r.iterations) + " iterations; fall back to omega");
    info.sigma = r.value;
    if (opt.inflate_power_sigma) info.sigma *= 1.0 + 10.0 * opt.tol;
    info.sigma = std::clamp(info.sigma, 1.0, static_cast<double>(info.omega));
    info.sigma_source = SigmaSource::ExactPowerIteration;
  } else {
    info.sigma = static_cast<double>(info.omega);
    info.sigma_source = SigmaSource::UpperBoundOmega;
  }

  SigmaPrimeMode mode = opt.sigma_prime_mode;
  if (mode == SigmaPrimeMode::Auto)
    mode = a.cols() <= opt.dense_limit ? SigmaPrimeMode::Exact : SigmaPrimeMode::OmegaPrimeBound;
  switch (mode) {
    case SigmaPrimeMode::Exact:
      try {
        info.sigma_prime = std::max(1.0, sigma_prime_exact(a, p, opt.dense_limit));
        info.sigma_prime_source = SigmaPrimeSource::ExactSmallInstance;
      } catch (const NumericError&) {
        // singular block diagonal: sigma' unbounded, forced to the omega' bound
        info.sigma_prime = static_cast<double>(info.omega_prime);
        info.sigma_prime_source = SigmaPrimeSource::UpperBoundOmegaPrime;
      }
      break;
    case SigmaPrimeMode::OmegaPrimeBound:
      info.sigma_prime = static_cast<double>(info.omega_prime);
      info.sigma_prime_source = SigmaPrimeSource::UpperBoundOmegaPrime;
      break;
    case SigmaPrimeMode::SkipDoubling: {
      require(tau >= 2, "skip-doubling mode requires tau >= 2");
      info.sigma_prime_source = SigmaPrimeSource::SkippedDoubling;
      break;
    }
    case SigmaPrimeMode::Auto: break;  // resolved above
  }

  if (info.sigma_prime_source == SigmaPrimeSource::SkippedDoubling) {
    const BetaStar b = beta_star(tau, info.s, info.sigma, 1.0);
    info.beta1 = b.beta1;
    info.beta2 = b.beta1;  // surrogate: beta = 2 beta1
    info.beta = 2.0 * b.beta1;
  } else {
    const BetaStar b = beta_star(tau, info.s, info.sigma, *info.sigma_prime);
    info.beta1 = b.beta1;
    info.beta2 = b.beta2;
    info.beta = b.beta;
  }
  return info;
}

// lambda_min(Q): strong convexity of the square loss w.r.t. ||.||_M on
// desk-scale instances.
inline double mu_f_square_loss(const SparseMatrix& a, std::size_t dense_limit = 500) {
  const Eigen::MatrixXd q = dense_q(a, dense_limit);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  require(es.info() == Eigen::Success, "eigendecomposition failed");
  return std::max(0.0, es.eigenvalues().minCoeff());
}

// min_i l2_i / M_ii: strong convexity of an L2 or elastic-net regularizer
// w.r.t. ||.||_M. Zero when the regularizer has no quadratic part.
inline double mu_reg_l2(const SeparableReg& reg, std::span<const double> m) {
  require(reg.dim() == m.size(), "regularizer dimension mismatch");
  if (reg.kind() != RegKind::L2 && reg.kind() != RegKind::ElasticNet) return 0.0;
  double mu = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.size(); ++i) mu = std::min(mu, reg.l2_weight(i) / m[i]);
  return mu;
}

}  // namespace hydra
