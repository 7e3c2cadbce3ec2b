#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "hydra/eso.hpp"
#include "hydra/generator.hpp"

using namespace hydra;

TEST_CASE("block-angular shape: the 5x4 reference layout") {
  GeneratorSpec spec;
  spec.nodes = 2;
  spec.local_rows = 2;
  spec.global_rows = 1;
  spec.cols_per_block = 2;
  spec.nnz_per_local_row = 1;
  spec.nnz_per_global_row = 4;
  spec.seed = 1;
  const SparseMatrix a = gen_block_angular(spec);
  REQUIRE(a.rows() == 5);
  REQUIRE(a.cols() == 4);
  for (const Triplet& t : a.to_triplets()) {
    if (t.row < 2)
      CHECK(t.col < 2);  // block 0 local rows
    else if (t.row < 4)
      CHECK((t.col >= 2 && t.col < 4));  // block 1 local rows
    else
      CHECK(t.row == 4);  // global band
  }
  // requested per-row densities met exactly
  CHECK(nnz_per_row(a) == std::vector<std::size_t>{1, 1, 1, 1, 4});
}

TEST_CASE("block-angular: omega' comes from the global band only") {
  GeneratorSpec spec;
  spec.nodes = 3;
  spec.local_rows = 6;
  spec.global_rows = 2;
  spec.cols_per_block = 4;
  spec.nnz_per_local_row = 2;
  spec.nnz_per_global_row = 9;
  spec.seed = 5;
  const SparseMatrix a = gen_block_angular(spec);
  const Partition p = Partition::contiguous(12, 3);
  const auto per_row = blocks_per_row(a, p);
  for (std::size_t r = 0; r < 18; ++r) CHECK(per_row[r] == 1);  // local rows touch one block
  CHECK(omega_prime(a, p) == std::max(per_row[18], per_row[19]));
  CHECK(omega_prime(a, p) >= 2);  // nine entries across three blocks of width four

  // zero global rows: block diagonal, omega' = 1, so the sigma' bound is 1
  GeneratorSpec diag = spec;
  diag.global_rows = 0;
  const SparseMatrix b = gen_block_angular(diag);
  CHECK(omega_prime(b, p) == 1);
  CHECK(sigma_prime_exact(b, p) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("generator validation errors") {
  GeneratorSpec spec;
  spec.nodes = 2;
  spec.local_rows = 2;
  spec.cols_per_block = 4;
  spec.nnz_per_local_row = 5;  // exceeds the block width
  CHECK_THROWS_AS(gen_block_angular(spec), ValidationError);
  spec.nnz_per_local_row = 1;  // 2*1 < 4: cannot cover all columns
  CHECK_THROWS_AS(gen_block_angular(spec), ValidationError);
  spec.nnz_per_local_row = 2;
  spec.global_rows = 1;
  spec.nnz_per_global_row = 9;  // exceeds d = 8
  CHECK_THROWS_AS(gen_block_angular(spec), ValidationError);
  spec.nnz_per_global_row = 2;
  spec.support_size = 9;
  CHECK_THROWS_AS(gen_lasso_certified(spec), ValidationError);
}

TEST_CASE("generated matrices are deterministic per seed and have no zero columns") {
  GeneratorSpec spec;
  spec.nodes = 4;
  spec.local_rows = 7;
  spec.global_rows = 3;
  spec.cols_per_block = 5;
  spec.nnz_per_local_row = 2;
  spec.nnz_per_global_row = 8;
  spec.seed = 33;
  const SparseMatrix a = gen_block_angular(spec);
  const SparseMatrix b = gen_block_angular(spec);
  CHECK(a == b);
  spec.seed = 34;
  CHECK_FALSE(a == gen_block_angular(spec));
  for (std::size_t j = 0; j < a.cols(); ++j) CHECK(a.col_nnz(j) > 0);
}

TEST_CASE("certified instances pass their own optimality certificate") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    GeneratorSpec spec;
    spec.nodes = 2;
    spec.local_rows = 10;
    spec.global_rows = 4;
    spec.cols_per_block = 8;
    spec.nnz_per_local_row = 3;
    spec.nnz_per_global_row = 6;
    spec.lambda = 0.3 + 0.1 * static_cast<double>(seed);
    spec.support_size = seed % 5;  // includes the zero-support case
    spec.seed = seed;
    const CertifiedInstance inst = gen_lasso_certified(spec);

    CHECK(certificate_violation(inst.A, inst.y, inst.x_star, inst.lambda) <= 1e-8);
    const double recomputed = l1_objective(inst.A, inst.y, inst.x_star, inst.lambda);
    CHECK(std::abs(recomputed - inst.optimal_value) <=
          1e-12 * (1.0 + std::abs(inst.optimal_value)));

    std::size_t support = 0;
    for (double v : inst.x_star)
      if (v != 0.0) ++support;
    CHECK(support == spec.support_size);

    // the residual invariant g* = A x* - y holds to roundoff
    std::vector<double> g(inst.A.rows());
    for (std::size_t r = 0; r < g.size(); ++r) g[r] = -inst.y[r];
    for (std::size_t i = 0; i < inst.A.cols(); ++i)
      if (inst.x_star[i] != 0.0) inst.A.add_scaled_col(i, inst.x_star[i], g);
    for (std::size_t r = 0; r < g.size(); ++r)
      CHECK(g[r] == Catch::Approx(inst.g_star[r]).margin(1e-10));
  }
}

TEST_CASE("zero-support instances reduce to a pure dual-feasibility certificate") {
  GeneratorSpec spec;
  spec.nodes = 1;
  spec.local_rows = 12;
  spec.global_rows = 0;
  spec.cols_per_block = 6;
  spec.nnz_per_local_row = 2;
  spec.lambda = 1.1;
  spec.support_size = 0;
  spec.seed = 9;
  const CertifiedInstance inst = gen_lasso_certified(spec);
  for (double v : inst.x_star) CHECK(v == 0.0);
  // ||A^T g*||_inf <= lambda
  for (std::size_t i = 0; i < inst.A.cols(); ++i)
    CHECK(std::abs(inst.A.col_dot(i, inst.g_star)) <= spec.lambda + 1e-12);
  CHECK(inst.optimal_value ==
        Catch::Approx(l1_objective(inst.A, inst.y, inst.x_star, inst.lambda)));
}

TEST_CASE("doubling lambda with the same seed keeps the certificate valid") {
  GeneratorSpec spec;
  spec.nodes = 2;
  spec.local_rows = 9;
  spec.global_rows = 2;
  spec.cols_per_block = 6;
  spec.nnz_per_local_row = 3;
  spec.nnz_per_global_row = 5;
  spec.lambda = 0.4;
  spec.support_size = 4;
  spec.seed = 21;
  const CertifiedInstance base = gen_lasso_certified(spec);
  spec.lambda *= 2.0;
  const CertifiedInstance doubled = gen_lasso_certified(spec);
  // same seed, proportional rescaling: x* is unchanged and both certify
  for (std::size_t i = 0; i < base.x_star.size(); ++i)
    CHECK(doubled.x_star[i] == Catch::Approx(base.x_star[i]).margin(1e-14));
  CHECK(certificate_violation(doubled.A, doubled.y, doubled.x_star, doubled.lambda) <= 1e-8);
}

TEST_CASE("elastic-net instances certify with the quadratic term") {
  GeneratorSpec spec;
  spec.nodes = 2;
  spec.local_rows = 10;
  spec.global_rows = 3;
  spec.cols_per_block = 7;
  spec.nnz_per_local_row = 3;
  spec.nnz_per_global_row = 6;
  spec.lambda = 0.6;
  spec.l2_weight = 0.25;
  spec.support_size = 5;
  spec.seed = 27;
  const CertifiedInstance inst = gen_lasso_certified(spec);
  CHECK(certificate_violation(inst.A, inst.y, inst.x_star, inst.lambda, inst.l2_weight) <= 1e-8);
  // dropping the l2 term must break optimality at the support
  CHECK(certificate_violation(inst.A, inst.y, inst.x_star, inst.lambda) > 1e-6);
  CHECK(std::abs(l1_objective(inst.A, inst.y, inst.x_star, inst.lambda, inst.l2_weight) -
                 inst.optimal_value) <= 1e-12 * (1.0 + std::abs(inst.optimal_value)));
}
