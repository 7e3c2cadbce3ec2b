#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <random>

#include "hydra/eso.hpp"
#include "oracles.hpp"

using namespace hydra;

namespace {

SparseMatrix identity(std::size_t d) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < d; ++i) t.push_back({i, i, 1.0});
  return SparseMatrix::from_triplets(d, d, std::move(t));
}

}  // namespace

TEST_CASE("omega and omega_prime") {
  // A = [[1,1,0],[0,1,1]]
  const SparseMatrix a =
      SparseMatrix::from_triplets(2, 3, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 1, 1.0}, {1, 2, 1.0}});
  CHECK(omega(a) == 2);
  CHECK(omega(identity(4)) == 1);

  std::vector<Triplet> dense;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t j = 0; j < 5; ++j) dense.push_back({r, j, 1.0 + double(r + j)});
  CHECK(omega(SparseMatrix::from_triplets(3, 5, std::move(dense))) == 5);

  CHECK(omega_prime(a, Partition::contiguous(3, 1)) == 1);
  CHECK(omega_prime(a, Partition::contiguous(3, 3)) == omega(a));
  CHECK(omega_prime(a, Partition::from_assignment({0, 0, 1})) == 2);
}

TEST_CASE("sigma via power iteration") {
  // orthogonal equal-norm columns: Q = I
  const auto r1 = sigma_power(identity(5), 1e-10, 5000, 1);
  CHECK(r1.converged);
  CHECK(r1.value == Catch::Approx(1.0).epsilon(1e-9));

  // two identical columns (1;0): Q = [[1,1],[1,1]], eigenvalues {2, 0}
  const SparseMatrix twin = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  const auto r2 = sigma_power(twin, 1e-10, 5000, 1);
  CHECK(r2.converged);
  CHECK(r2.value == Catch::Approx(2.0).epsilon(1e-9));

  // sigma <= omega up to the stopping slack, and matches the dense oracle
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng() % 20, d = 2 + rng() % 16;
    const SparseMatrix a = oracles::random_sparse(n, d, 0.3, rng);
    const double tol = 1e-8;
    const auto r = sigma_power(a, tol, 20000, trial);
    REQUIRE(r.converged);
    CHECK(r.value <= static_cast<double>(omega(a)) + tol * r.value);
    CHECK(r.value >= 1.0 - 1e-6);
    const double exact = oracles::sigma_dense_oracle(a);
    CHECK(r.value <= exact + 1e-9);  // Rayleigh quotient is a lower bound
    CHECK(r.value == Catch::Approx(exact).epsilon(1e-4));
  }
}

TEST_CASE("sigma power iteration reports non-convergence") {
  const SparseMatrix twin = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  const auto r = sigma_power(twin, 1e-16, 2, 1);
  CHECK_FALSE(r.converged);
}

TEST_CASE("sigma_prime: special partitions") {
  std::mt19937_64 rng(7);
  const SparseMatrix a = oracles::random_sparse(12, 8, 0.4, rng);

  // c = 1: the constraint set is the objective's own unit ball
  CHECK(sigma_prime_exact(a, Partition::contiguous(8, 1)) == Catch::Approx(1.0).margin(1e-9));

  // c = d: B^Q = I, so sigma' = sigma
  const double sp = sigma_prime_exact(a, Partition::contiguous(8, 8));
  CHECK(sp == Catch::Approx(oracles::sigma_dense_oracle(a)).margin(1e-9));

  // random small instances live inside the Lemma-1 chain
  for (int trial = 0; trial < 15; ++trial) {
    const std::size_t d = 8;
    const SparseMatrix b = oracles::random_sparse(16, d, 0.5, rng);
    const Partition p = Partition::contiguous(d, 2);
    double sprime = 0.0;
    try {
      sprime = sigma_prime_exact(b, p);
    } catch (const NumericError&) {
      continue;  // singular block diagonal: sigma' undefined for this draw
    }
    const double sigma = oracles::sigma_dense_oracle(b);
    const double s = static_cast<double>(p.block_size());
    CHECK(sprime >= std::max(1.0, sigma / s) - 1e-8);
    CHECK(sprime <= static_cast<double>(omega_prime(b, p)) + 1e-8);
  }
}

TEST_CASE("sigma_prime reports singular block diagonals") {
  // duplicate columns inside one block make Q^{ll} singular
  const SparseMatrix dup = SparseMatrix::from_triplets(
      3, 4, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
  CHECK_THROWS_AS(sigma_prime_exact(dup, Partition::contiguous(4, 2)), NumericError);
  // the same columns in different blocks are fine
  CHECK_NOTHROW(sigma_prime_exact(dup, Partition::from_assignment({0, 1, 0, 1})));
}

TEST_CASE("sigma_prime respects the dense size limit") {
  CHECK_THROWS_AS(sigma_prime_exact(identity(8), Partition::contiguous(8, 2), 4),
                  ValidationError);
}

TEST_CASE("beta_star special cases from the stepsize table") {
  const double sigmas[] = {1.0, 1.5, 3.0, 7.5, 20.0};
  const double sigma_primes[] = {1.0, 1.2, 2.0, 4.0};
  const std::size_t ss[] = {2, 3, 8, 50};

  for (double sigma : sigmas) {
    for (double sp : sigma_primes) {
      // tau = 1: beta* = 1 + (sigma/s)(sigma'-1)/sigma'
      for (std::size_t s : ss) {
        const BetaStar b = beta_star(1, s, sigma, sp);
        CHECK(std::abs(b.beta - (1.0 + sigma / double(s) * (sp - 1.0) / sp)) <= 1e-12);
      }
      // tau = s: beta* = sigma
      for (std::size_t s : ss) {
        const BetaStar b = beta_star(s, s, sigma, sp);
        CHECK(std::abs(b.beta - sigma) <= 1e-12 * sigma);
      }
    }
    // c = 1 (sigma' = 1): beta* = 1 + (tau-1)(sigma-1)/(d-1) with s = d
    for (std::size_t d : {2ul, 5ul, 64ul}) {
      for (std::size_t tau = 1; tau <= d; tau += std::max<std::size_t>(1, d / 4)) {
        const BetaStar b = beta_star(tau, d, sigma, 1.0);
        const double expect = 1.0 + double(tau - 1) * (sigma - 1.0) / double(d - 1);
        CHECK(std::abs(b.beta - expect) <= 1e-12 * std::max(1.0, expect));
      }
    }
  }
  // s = 1 (c = d) forces tau = 1 and sigma' = sigma: beta* = sigma
  for (double sigma : sigmas) {
    const BetaStar b = beta_star(1, 1, sigma, sigma);
    CHECK(std::abs(b.beta - sigma) <= 1e-12 * sigma);
  }
}

TEST_CASE("beta input validation") {
  CHECK_THROWS_AS(beta_star(0, 4, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(beta_star(5, 4, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(beta_star(2, 4, 0.5, 1.0), ValidationError);
  CHECK_THROWS_AS(beta_safe_doubling(1, 4, 1.0), ValidationError);
}

TEST_CASE("doubling bound: 2*beta1 dominates beta* for every tau >= 2") {
  CHECK(beta_safe_doubling(2, 4, 1.0) == Catch::Approx(2.0));
  for (std::size_t s : {2ul, 3ul, 5ul, 16ul}) {
    for (std::size_t c : {1ul, 2ul, 4ul, 10ul}) {
      const double d = double(s * c);
      for (std::size_t tau = 2; tau <= s; ++tau) {
        for (double sigma : {1.0, 1.5, 2.0, 0.3 * d, d}) {
          if (sigma < 1.0) continue;
          const double twice = beta_safe_doubling(tau, s, sigma);
          for (double sp : {1.0, 1.3, double(c)}) {
            if (sp < 1.0) continue;
            CHECK(beta_star(tau, s, sigma, sp).beta <= twice + 1e-12 * twice);
          }
        }
      }
    }
  }
}

TEST_CASE("appendix form of the doubling inequality") {
  // (s - tau) + (tau - 2) sigma + (sigma/d)(s + tau) >= 0
  for (std::size_t s : {2ul, 3ul, 8ul, 40ul}) {
    for (std::size_t c : {1ul, 2ul, 8ul}) {
      const double d = double(s * c);
      for (std::size_t tau = 2; tau <= s; ++tau)
        for (double sigma = 1.0; sigma <= d; sigma += std::max(1.0, d / 7.0))
          CHECK(double(s - tau) + double(tau - 2) * sigma + sigma / d * double(s + tau) >=
                0.0);
    }
  }
}

TEST_CASE("beta* is nondecreasing in sigma and sigma'; in tau when sigma >= sigma'") {
  for (std::size_t s : {2ul, 3ul, 9ul}) {
    for (std::size_t tau = 1; tau <= s; ++tau) {
      for (double sp : {1.0, 1.5, 3.0}) {
        double prev = 0.0;
        for (double sigma = std::max(1.0, sp); sigma <= 24.0; sigma += 0.5) {
          const double b = beta_star(tau, s, sigma, sp).beta;
          CHECK(b >= prev - 1e-12);
          prev = b;
        }
      }
      for (double sigma : {1.0, 2.0, 8.0}) {
        double prev = 0.0;
        for (double sp = 1.0; sp <= 6.0; sp += 0.25) {
          const double b = beta_star(tau, s, sigma, sp).beta;
          CHECK(b >= prev - 1e-12);
          prev = b;
        }
      }
    }
    // monotone in tau only on the sigma >= sigma' region; beta*(tau) can
    // decrease when sigma' > sigma (e.g. s=3, sigma=1.1, sigma'=2)
    for (double sigma : {1.0, 2.0, 10.0}) {
      for (double sp : {1.0, 1.3, sigma}) {
        if (sp > sigma) continue;
        double prev = 0.0;
        for (std::size_t tau = 1; tau <= s; ++tau) {
          const double b = beta_star(tau, s, sigma, sp).beta;
          CHECK(b >= prev - 1e-12);
          prev = b;
        }
      }
    }
  }
  // pin the counterexample direction so the restriction stays honest
  CHECK(beta_star(2, 3, 1.1, 2.0).beta < beta_star(1, 3, 1.1, 2.0).beta);
}

TEST_CASE("sampling expectation identity: closed form and special cases") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);

  // tau = s reduces to x^T G x; tau = 1 to the two-term form
  const Partition p = Partition::contiguous(6, 2);
  Eigen::MatrixXd g(6, 6);
  Eigen::VectorXd x(6);
  for (int i = 0; i < 6; ++i) {
    x[i] = normal(rng);
    for (int j = 0; j < 6; ++j) g(i, j) = normal(rng);
  }
  CHECK(eso_expectation_formula(g, x, 3, p) == Catch::Approx(x.dot(g * x)).margin(1e-12));

  double diag_form = 0.0, block_form = 0.0;
  for (int i = 0; i < 6; ++i) diag_form += g(i, i) * x[i] * x[i];
  for (std::size_t l = 0; l < 2; ++l)
    for (std::size_t bi : p.block(l))
      for (std::size_t bj : p.block(l))
        block_form += x[Eigen::Index(bi)] * g(Eigen::Index(bi), Eigen::Index(bj)) *
                      x[Eigen::Index(bj)];
  const double s = 3.0;
  const double expect_tau1 =
      (1.0 / s) * (diag_form + (1.0 / s) * (x.dot(g * x) - block_form));
  CHECK(eso_expectation_formula(g, x, 1, p) == Catch::Approx(expect_tau1).margin(1e-12));
}

TEST_CASE("sampling expectation identity matches exhaustive enumeration") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Partition p = Partition::contiguous(6, 2);  // s=3, tau=2: 9 outcomes
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd g(6, 6);
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) {
      x[i] = normal(rng);
      for (int j = 0; j < 6; ++j) g(i, j) = normal(rng);
    }
    const double formula = eso_expectation_formula(g, x, 2, p);
    const double exact = oracles::enumerate_eso_expectation(g, x, 2, p);
    CHECK(std::abs(formula - exact) <= 1e-10 * (1.0 + std::abs(exact)));
  }
}

TEST_CASE("iteration bound from the strong-convexity theorem") {
  ConvergenceInputs in;
  in.mu_f = 0.0;
  in.mu_reg = 1.0;
  in.rho = 0.5;
  in.epsilon = 0.5;
  // gap/(eps*rho) = e with exact binary scaling: gap = e * 0.25
  in.initial_gap = std::exp(1.0) * 0.25;
  // (d/(c tau)) * ((beta+mu_R)/(mu_f+mu_R)) * log(e) = 5 * 3 * 1 = 15
  CHECK(theorem1_iterations(100, 4, 5, 2.0, in) == 15);

  // halving epsilon adds (d/(c tau)) * cond * log 2 before the ceiling
  ConvergenceInputs half = in;
  half.epsilon = 0.25;
  const double base = 5.0 * 3.0 * std::log(in.initial_gap / (in.epsilon * in.rho));
  const double grown = 5.0 * 3.0 * std::log(half.initial_gap / (half.epsilon * half.rho));
  CHECK(grown - base == Catch::Approx(15.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(theorem1_iterations(100, 4, 5, 2.0, half) ==
        static_cast<std::size_t>(std::ceil(grown)));

  // mu_R -> infinity: the conditioning factor approaches 1
  ConvergenceInputs big = in;
  big.mu_reg = 1e12;
  big.epsilon = 0.1;
  big.initial_gap = 7.3;
  const double lead = 5.0 * std::log(big.initial_gap / (big.epsilon * big.rho));
  const std::size_t t = theorem1_iterations(100, 4, 5, 2.0, big);
  CHECK(static_cast<double>(t) == Catch::Approx(std::ceil(lead)).margin(1.0));

  ConvergenceInputs bad = in;
  bad.mu_reg = 0.0;
  CHECK_THROWS_AS(theorem1_iterations(100, 4, 5, 2.0, bad), ValidationError);
  ConvergenceInputs eps_high = in;
  eps_high.epsilon = 10.0 * in.initial_gap;
  CHECK_THROWS_AS(theorem1_iterations(100, 4, 5, 2.0, eps_high), ValidationError);
}

TEST_CASE("leading factor gamma") {
  for (double sigma : {1.0, 2.0, 6.0}) {
    for (double sp : {1.0, 1.5, 3.0}) {
      for (std::size_t s : {2ul, 4ul, 10ul}) {
        for (std::size_t c : {1ul, 2ul, 5ul}) {
          const double g1 = leading_factor_gamma(1, s, c, sigma, sp);
          CHECK(g1 == Catch::Approx(double(s) + sigma * (sp - 1.0) / sp).epsilon(1e-12));
          const double gs = leading_factor_gamma(s, s, c, sigma, sp);
          CHECK(gs == Catch::Approx(sigma).epsilon(1e-12));
          // the price of randomization: gamma_1 - gamma_s = s - sigma/sigma' >= 0
          CHECK(g1 - gs == Catch::Approx(double(s) - sigma / sp).margin(1e-10));
          if (sigma / sp <= double(s)) CHECK(g1 - gs >= -1e-10);
        }
      }
    }
  }
}

TEST_CASE("strong convexity helpers on tiny instances") {
  CHECK(mu_f_square_loss(identity(4)) == Catch::Approx(1.0));

  std::mt19937_64 rng(17);
  const SparseMatrix a = oracles::random_sparse(10, 5, 0.5, rng);
  const auto m = m_diag(a, LossKind::SquareLoss);
  const SeparableReg reg = SeparableReg::l2(5, 2.0);
  double expect = std::numeric_limits<double>::infinity();
  for (double mi : m) expect = std::min(expect, 2.0 / mi);
  CHECK(mu_reg_l2(reg, m) == Catch::Approx(expect));
  CHECK(mu_reg_l2(SeparableReg::l1(5, 1.0), m) == 0.0);
  CHECK(mu_reg_l2(SeparableReg::elastic_net(5, 1.0, 0.5), m) ==
        Catch::Approx(expect * 0.25));
}

TEST_CASE("analyze_stepsizes wires the sources together") {
  const SparseMatrix id = identity(6);
  const Partition p1 = Partition::contiguous(6, 1);

  AnalyzeOptions opt;
  opt.seed = 3;
  StepsizeInfo info = analyze_stepsizes(id, p1, 2, opt);
  CHECK(info.omega == 1);
  CHECK(info.omega_prime == 1);
  CHECK(info.sigma_source == SigmaSource::ExactPowerIteration);
  CHECK(info.sigma == Catch::Approx(1.0).margin(1e-4));
  CHECK(info.sigma_prime_source == SigmaPrimeSource::ExactSmallInstance);
  CHECK(info.beta == Catch::Approx(1.0).margin(1e-4));

  opt.sigma_mode = SigmaMode::OmegaBound;
  opt.sigma_prime_mode = SigmaPrimeMode::OmegaPrimeBound;
  info = analyze_stepsizes(id, Partition::contiguous(6, 2), 3, opt);
  CHECK(info.sigma == 1.0);
  CHECK(info.sigma_source == SigmaSource::UpperBoundOmega);
  CHECK(*info.sigma_prime == 1.0);
  CHECK(info.beta == Catch::Approx(1.0));

  opt.sigma_prime_mode = SigmaPrimeMode::SkipDoubling;
  info = analyze_stepsizes(id, Partition::contiguous(6, 2), 3, opt);
  CHECK_FALSE(info.sigma_prime.has_value());
  CHECK(info.sigma_prime_source == SigmaPrimeSource::SkippedDoubling);
  CHECK(info.beta == Catch::Approx(2.0 * info.beta1));
  CHECK_THROWS_AS(analyze_stepsizes(id, Partition::contiguous(6, 2), 1, opt), ValidationError);

  // singular block diagonal forces the omega' bound
  const SparseMatrix dup = SparseMatrix::from_triplets(
      3, 4, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
  AnalyzeOptions opt2;
  opt2.sigma_prime_mode = SigmaPrimeMode::Exact;
  info = analyze_stepsizes(dup, Partition::contiguous(4, 2), 1, opt2);
  CHECK(info.sigma_prime_source == SigmaPrimeSource::UpperBoundOmegaPrime);
  CHECK(*info.sigma_prime == static_cast<double>(info.omega_prime));
}
