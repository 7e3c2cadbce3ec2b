// Command line front end: generate | analyze | solve. Every flag can also be
// set through a flat key=value config file (--config); command line wins.

#include <CLI11.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hydra/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hydra: distributed randomized coordinate descent (simulator + analysis)"};
  app.require_subcommand(1);

  hydra::GenerateConfig gen;
  CLI::App* g = app.add_subcommand("generate", "write a certified LASSO instance");
  g->set_config("--config");
  g->add_option("--nodes,-c", gen.spec.nodes, "number of nodes (c)");
  g->add_option("--local-rows", gen.spec.local_rows, "rows of each diagonal block");
  g->add_option("--global-rows", gen.spec.global_rows, "rows of the coupling band");
  g->add_option("--cols-per-block,-s", gen.spec.cols_per_block, "columns per block (s)");
  g->add_option("--nnz-local", gen.spec.nnz_per_local_row, "nonzeros per local row");
  g->add_option("--nnz-global", gen.spec.nnz_per_global_row, "nonzeros per global row");
  g->add_option("--lambda", gen.spec.lambda, "L1 weight");
  g->add_option("--l2", gen.spec.l2_weight, "optional L2 weight (elastic net)");
  g->add_option("--support", gen.spec.support_size, "nonzeros of the optimum");
  g->add_option("--seed", gen.spec.seed, "generator seed");
  g->add_option("--out,-o", gen.out_dir, "output directory");

  hydra::AnalyzeConfig ana;
  CLI::App* a = app.add_subcommand("analyze", "stepsize report for a matrix + partition");
  a->set_config("--config");
  a->add_option("--matrix,-m", ana.matrix_path, "Matrix Market file")->required();
  a->add_option("--partition-file", ana.partition_path, "partition file (one node id per line)");
  a->add_option("--nodes,-c", ana.nodes, "node count for the contiguous partition");
  a->add_option("--tau", ana.tau, "coordinates per node per iteration");
  a->add_option("--sigma-mode", ana.sigma_mode, "power | omega");
  a->add_option("--sigma-prime-mode", ana.sigma_prime_mode,
                "auto | exact | omega-prime | skip-doubling");
  a->add_option("--tol", ana.tol, "power iteration tolerance");
  a->add_option("--max-iter", ana.max_iter, "power iteration cap");
  a->add_option("--seed", ana.seed, "power iteration start seed");
  a->add_option("--dense-limit", ana.dense_limit, "max d for the dense sigma' oracle");
  a->add_option("--report", ana.report_path, "also write the key=value report here");
  a->add_option("--csv", ana.csv_path, "also write a one-row CSV here");
  a->add_option("--curve-out", ana.curve_path, "price-of-distribution curves CSV");
  a->add_option("--curve-c", ana.curve_nodes, "node counts for the curves");
  a->add_option("--curve-tau", ana.curve_taus, "tau values for the curves");
  a->add_option("--curve-points", ana.curve_sigma_points, "sigma samples per curve");

  hydra::SolveConfig sol;
  double gap_target = -1.0;
  CLI::App* s = app.add_subcommand("solve", "run the distributed solver");
  s->set_config("--config");
  s->add_option("--manifest", sol.manifest_path, "instance manifest from `generate`");
  s->add_option("--matrix,-m", sol.matrix_path, "Matrix Market file");
  s->add_option("--labels,-y", sol.labels_path, "label/target vector file");
  s->add_option("--loss", sol.loss_name, "square | logistic | square-hinge");
  s->add_option("--reg", sol.reg_name, "zero | l1 | l2 | elastic-net | box");
  s->add_option("--lambda", sol.lambda, "regularizer weight");
  s->add_option("--l2", sol.l2_weight, "elastic-net L2 weight");
  s->add_option("--lambda-file", sol.lambda_file, "per-coordinate L1 weights");
  s->add_option("--box-lo", sol.box_lo, "box lower bound");
  s->add_option("--box-hi", sol.box_hi, "box upper bound");
  s->add_option("--partition-file", sol.partition_path, "partition file");
  s->add_option("--nodes,-c", sol.nodes, "node count for the contiguous partition");
  s->add_option("--protocol", sol.protocol, "ra | asl");
  s->add_option("--execution", sol.execution, "lockstep | threaded");
  s->add_option("--tau", sol.tau, "coordinates per node per iteration");
  s->add_option("--beta", sol.beta, "auto | double-beta1 | <number >= 1>");
  s->add_option("--iters", sol.iters, "iteration cap");
  s->add_option("--eval-every", sol.eval_every, "evaluation period");
  s->add_option("--seed", sol.seed, "sampling seed");
  s->add_option("--gap-target", gap_target, "stop when the gap falls below this (needs L*)");
  s->add_option("--out,-o", sol.out_path, "trace CSV path");

  CLI11_PARSE(app, argc, argv);

  if (g->parsed()) return hydra::cmd_generate(gen);
  if (a->parsed()) return hydra::cmd_analyze(ana);
  if (s->parsed()) {
    if (gap_target >= 0.0) sol.gap_target = gap_target;
    return hydra::cmd_solve(sol);
  }
  return 1;
}
