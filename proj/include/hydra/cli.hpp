#pragma once

// Subcommand implementations behind the `hydra` binary: generate | analyze |
// solve. Kept header-side so the test suite can drive them in-process; the
// binary in tools/ only does flag parsing. All commands return a process exit
// code and report problems on stderr.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hydra/common.hpp"
#include "hydra/engine.hpp"
#include "hydra/eso.hpp"
#include "hydra/generator.hpp"
#include "hydra/io.hpp"
#include "hydra/problem.hpp"

namespace hydra {

// ---------------------------------------------------------------- generate

struct GenerateConfig {
  GeneratorSpec spec;
  std::string out_dir = ".";
};

inline void write_instance(const CertifiedInstance& inst, const GeneratorSpec& spec,
                           const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto at = [&dir](const char* name) { return (fs::path(dir) / name).string(); };
  save_matrix_market(inst.A, at("A.mtx"));
  save_vector(inst.y, at("y.txt"));
  save_vector(inst.x_star, at("xstar.txt"));

  Manifest m;
  m["matrix"] = "A.mtx";
  m["labels"] = "y.txt";
  m["xstar"] = "xstar.txt";
  m["loss"] = "square";
  m["lambda"] = format_double(inst.lambda);
  if (inst.l2_weight > 0.0) m["l2_weight"] = format_double(inst.l2_weight);
  m["optimal_value"] = format_double(inst.optimal_value);
  m["seed"] = std::to_string(spec.seed);
  m["nodes"] = std::to_string(spec.nodes);
  m["rows"] = std::to_string(inst.A.rows());
  m["cols"] = std::to_string(inst.A.cols());
  m["support_size"] = std::to_string(spec.support_size);
  m["certificate_violation"] =
      format_double(certificate_violation(inst.A, inst.y, inst.x_star, inst.lambda,
                                          inst.l2_weight));
  save_manifest(m, at("manifest.txt"));
}

inline int cmd_generate(const GenerateConfig& cfg) {
  try {
    const CertifiedInstance inst = gen_lasso_certified(cfg.spec);
    write_instance(inst, cfg.spec, cfg.out_dir);
    std::cout << "wrote instance to " << cfg.out_dir << " (n=" << inst.A.rows()
              << ", d=" << inst.A.cols() << ", nnz=" << inst.A.nnz()
              << ", L*=" << format_double(inst.optimal_value) << ")\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "generate: " << e.what() << "\n";
    return 1;
  }
}

// ----------------------------------------------------------------- analyze

struct AnalyzeConfig {
  std::string matrix_path;
  std::string partition_path;  // optional; contiguous partition otherwise
  std::size_t nodes = 1;
  std::size_t tau = 1;
  std::string sigma_mode = "power";        // power | omega
  std::string sigma_prime_mode = "auto";   // auto | exact | omega-prime | skip-doubling
  double tol = 1e-6;
  std::size_t max_iter = 5000;
  std::uint64_t seed = 0;
  std::size_t dense_limit = 500;
  std::string report_path;  // optional key=value file (stdout always)
  std::string csv_path;     // optional one-row CSV
  // Optional price-of-distribution curves: d*beta1/(c tau) as a function of
  // sigma for grids of (c, tau), plus the safe-doubling variant.
  std::string curve_path;
  std::vector<std::size_t> curve_nodes;
  std::vector<std::size_t> curve_taus;
  std::size_t curve_sigma_points = 40;
};

inline std::vector<std::pair<std::string, std::string>> stepsize_report(const StepsizeInfo& info,
                                                                        std::uint64_t seed) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("d", std::to_string(info.s * info.c));
  kv.emplace_back("c", std::to_string(info.c));
  kv.emplace_back("s", std::to_string(info.s));
  kv.emplace_back("s1", std::to_string(info.s1));
  kv.emplace_back("tau", std::to_string(info.tau));
  kv.emplace_back("omega", std::to_string(info.omega));
  kv.emplace_back("omega_prime", std::to_string(info.omega_prime));
  kv.emplace_back("sigma", format_double(info.sigma));
  kv.emplace_back("sigma_source", to_string(info.sigma_source));
  kv.emplace_back("sigma_prime", info.sigma_prime ? format_double(*info.sigma_prime) : "skipped");
  kv.emplace_back("sigma_prime_source", to_string(info.sigma_prime_source));
  kv.emplace_back("beta1", format_double(info.beta1));
  kv.emplace_back("beta2", format_double(info.beta2));
  kv.emplace_back("beta", format_double(info.beta));
  kv.emplace_back("seed", std::to_string(seed));
  return kv;
}

inline void write_beta_curves(const AnalyzeConfig& cfg, std::size_t d) {
  std::ofstream out(cfg.curve_path);
  if (!out) throw Error("cannot open file for writing: " + cfg.curve_path);
  out << "d,c,s,tau,sigma,d_beta1_over_ctau,d_2beta1_over_ctau\n";
  for (std::size_t c : cfg.curve_nodes) {
    if (c == 0 || d % c != 0) throw ValidationError("curve node count must divide d");
    const std::size_t s = d / c;
    for (std::size_t tau : cfg.curve_taus) {
      if (tau < 1 || tau > s)
        throw ValidationError("curve tau " + std::to_string(tau) + " outside [1, s]");
      const std::size_t points = std::max<std::size_t>(2, cfg.curve_sigma_points);
      for (std::size_t k = 0; k < points; ++k) {
        // log-spaced sigma sweep over [1, d]
        const double frac = static_cast<double>(k) / static_cast<double>(points - 1);
        const double sigma = std::exp(frac * std::log(static_cast<double>(d)));
        const double s1 = s > 1 ? static_cast<double>(s - 1) : 1.0;
        const double beta1 = 1.0 + (static_cast<double>(tau) - 1.0) * (sigma - 1.0) / s1;
        const double value =
            static_cast<double>(d) * beta1 / (static_cast<double>(c) * static_cast<double>(tau));
        out << d << "," << c << "," << s << "," << tau << "," << format_double(sigma) << ","
            << format_double(value) << "," << format_double(2.0 * value) << "\n";
      }
    }
  }
  if (!out) throw Error("write failed: " + cfg.curve_path);
}

inline int cmd_analyze(const AnalyzeConfig& cfg) {
  try {
    const SparseMatrix a = load_matrix_market(cfg.matrix_path);
    Partition part = cfg.partition_path.empty()
                         ? Partition::contiguous(a.cols(), cfg.nodes)
                         : load_partition(cfg.partition_path);
    require(part.dim() == a.cols(), "partition does not cover the matrix columns");

    AnalyzeOptions opt;
    opt.tol = cfg.tol;
    opt.max_iter = cfg.max_iter;
    opt.seed = cfg.seed;
    opt.dense_limit = cfg.dense_limit;
    if (cfg.sigma_mode == "power")
      opt.sigma_mode = SigmaMode::Power;
    else if (cfg.sigma_mode == "omega")
      opt.sigma_mode = SigmaMode::OmegaBound;
    else
      throw ValidationError("unknown sigma mode: " + cfg.sigma_mode);
    if (cfg.sigma_prime_mode == "auto")
      opt.sigma_prime_mode = SigmaPrimeMode::Auto;
    else if (cfg.sigma_prime_mode == "exact")
      opt.sigma_prime_mode = SigmaPrimeMode::Exact;
    else if (cfg.sigma_prime_mode == "omega-prime")
      opt.sigma_prime_mode = SigmaPrimeMode::OmegaPrimeBound;
    else if (cfg.sigma_prime_mode == "skip-doubling")
      opt.sigma_prime_mode = SigmaPrimeMode::SkipDoubling;
    else
      throw ValidationError("unknown sigma' mode: " + cfg.sigma_prime_mode);

    StepsizeInfo info;
    try {
      info = analyze_stepsizes(a, part, cfg.tau, opt);
    } catch (const ConvergenceError& e) {
      std::cerr << "analyze: " << e.what() << "; falling back to the omega bound\n";
      opt.sigma_mode = SigmaMode::OmegaBound;
      info = analyze_stepsizes(a, part, cfg.tau, opt);
    }

    const auto kv = stepsize_report(info, cfg.seed);
    for (const auto& [k, v] : kv) std::cout << k << "=" << v << "\n";
    if (!cfg.report_path.empty()) {
      std::ofstream out(cfg.report_path);
      if (!out) throw Error("cannot open file for writing: " + cfg.report_path);
      for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
    }
    if (!cfg.csv_path.empty()) {
      std::ofstream out(cfg.csv_path);
      if (!out) throw Error("cannot open file for writing: " + cfg.csv_path);
      for (std::size_t i = 0; i < kv.size(); ++i) out << (i ? "," : "") << kv[i].first;
      out << "\n";
      for (std::size_t i = 0; i < kv.size(); ++i) out << (i ? "," : "") << kv[i].second;
      out << "\n";
    }
    if (!cfg.curve_path.empty()) {
      require(!cfg.curve_nodes.empty() && !cfg.curve_taus.empty(),
              "curve output needs --curve-c and --curve-tau grids");
      write_beta_curves(cfg, a.cols());
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "analyze: " << e.what() << "\n";
    return 1;
  }
}

// ------------------------------------------------------------------- solve

struct SolveConfig {
  // Instance either from a generator manifest or from explicit files.
  std::string manifest_path;
  std::string matrix_path;
  std::string labels_path;
  std::string loss_name = "square";
  std::string reg_name = "l1";  // zero | l1 | l2 | elastic-net | box
  double lambda = 1.0;
  double l2_weight = 0.0;
  std::string lambda_file;  // per-coordinate L1 weights
  double box_lo = 0.0;
  double box_hi = 1.0;

  std::string partition_path;  // optional; contiguous otherwise
  std::size_t nodes = 1;
  std::string protocol = "ra";        // ra | asl
  std::string execution = "lockstep"; // lockstep | threaded
  std::size_t tau = 1;
  std::string beta = "auto";  // auto | double-beta1 | <number>
  std::size_t iters = 1000;
  std::size_t eval_every = 10;
  std::uint64_t seed = 0;
  std::optional<double> gap_target;
  std::string out_path = "trace.csv";
  double sigma_tol = 1e-6;
  std::size_t sigma_max_iter = 5000;
};

inline ProblemInstance load_problem(const SolveConfig& cfg) {
  ProblemInstance p;
  if (!cfg.manifest_path.empty()) {
    namespace fs = std::filesystem;
    const Manifest m = load_manifest(cfg.manifest_path);
    const fs::path base = fs::path(cfg.manifest_path).parent_path();
    const auto resolve = [&base](const std::string& rel) {
      const fs::path q(rel);
      return q.is_absolute() ? q.string() : (base / q).string();
    };
    require(m.count("matrix") && m.count("labels"), "manifest must name matrix and labels");
    p.A = load_matrix_market(resolve(m.at("matrix")));
    p.y = load_vector(resolve(m.at("labels")));
    p.loss = loss_from_string(m.count("loss") ? m.at("loss") : "square");
    const double lambda = manifest_double(m, "lambda");
    const double l2 = m.count("l2_weight") ? manifest_double(m, "l2_weight") : 0.0;
    p.reg = l2 > 0.0 ? SeparableReg::elastic_net(p.A.cols(), lambda, l2)
                     : SeparableReg::l1(p.A.cols(), lambda);
    if (m.count("optimal_value")) p.optimal_value = manifest_double(m, "optimal_value");
    if (m.count("xstar")) p.optimum = load_vector(resolve(m.at("xstar")));
    return p;
  }
  require(!cfg.matrix_path.empty() && !cfg.labels_path.empty(),
          "need --manifest or both --matrix and --labels");
  p.A = load_matrix_market(cfg.matrix_path);
  p.y = load_vector(cfg.labels_path);
  p.loss = loss_from_string(cfg.loss_name);
  const std::size_t d = p.A.cols();
  if (cfg.reg_name == "zero")
    p.reg = SeparableReg::zero(d);
  else if (cfg.reg_name == "l1")
    p.reg = cfg.lambda_file.empty() ? SeparableReg::l1(d, cfg.lambda)
                                    : SeparableReg::l1(load_vector(cfg.lambda_file));
  else if (cfg.reg_name == "l2")
    p.reg = SeparableReg::l2(d, cfg.lambda);
  else if (cfg.reg_name == "elastic-net")
    p.reg = SeparableReg::elastic_net(d, cfg.lambda, cfg.l2_weight);
  else if (cfg.reg_name == "box")
    p.reg = SeparableReg::box(d, cfg.box_lo, cfg.box_hi);
  else
    throw ValidationError("unknown regularizer: " + cfg.reg_name);
  return p;
}

// beta resolution order: explicit number > double-beta1 (Lemma-2 path) >
// auto (power-iteration sigma + omega' bound for sigma').
inline std::pair<double, BetaSource> resolve_beta(const SolveConfig& cfg, const SparseMatrix& a,
                                                  const Partition& part) {
  if (cfg.beta != "auto" && cfg.beta != "double-beta1") {
    double value = 0.0;
    if (!detail::parse_double(cfg.beta, value))
      throw ValidationError("beta must be 'auto', 'double-beta1' or a number: " + cfg.beta);
    require(value >= 1.0, "beta must be at least 1");
    return {value, BetaSource::User};
  }
  AnalyzeOptions opt;
  opt.tol = cfg.sigma_tol;
  opt.max_iter = cfg.sigma_max_iter;
  opt.seed = cfg.seed;
  opt.sigma_prime_mode = cfg.beta == "double-beta1" ? SigmaPrimeMode::SkipDoubling
                                                    : SigmaPrimeMode::OmegaPrimeBound;
  StepsizeInfo info;
  try {
    info = analyze_stepsizes(a, part, cfg.tau, opt);
  } catch (const ConvergenceError&) {
    opt.sigma_mode = SigmaMode::OmegaBound;
    info = analyze_stepsizes(a, part, cfg.tau, opt);
  }
  return {std::max(1.0, info.beta),
          cfg.beta == "double-beta1" ? BetaSource::DoubleBeta1 : BetaSource::Auto};
}

inline int cmd_solve(const SolveConfig& cfg) {
  try {
    const ProblemInstance problem = load_problem(cfg);
    Partition part = cfg.partition_path.empty()
                         ? Partition::contiguous(problem.A.cols(), cfg.nodes)
                         : load_partition(cfg.partition_path);

    RunConfig rc;
    if (cfg.protocol == "ra")
      rc.protocol = Protocol::ReduceAll;
    else if (cfg.protocol == "asl")
      rc.protocol = Protocol::AsyncRing;
    else
      throw ValidationError("unknown protocol: " + cfg.protocol);
    if (cfg.execution == "lockstep")
      rc.execution = Execution::Lockstep;
    else if (cfg.execution == "threaded")
      rc.execution = Execution::Threaded;
    else
      throw ValidationError("unknown execution mode: " + cfg.execution);
    rc.tau = cfg.tau;
    rc.max_iters = cfg.iters;
    rc.eval_every = cfg.eval_every;
    rc.seed = cfg.seed;
    rc.gap_target = cfg.gap_target;
    std::tie(rc.beta, rc.beta_source) = resolve_beta(cfg, problem.A, part);

    const RunTrace trace = run(problem, part, rc);
    save_trace_csv(trace, cfg.out_path);
    const TraceRecord& last = trace.records.back();
    std::cout << "iterations=" << trace.iterations_run
              << " loss=" << format_double(last.loss);
    if (last.gap) std::cout << " gap=" << format_double(*last.gap);
    std::cout << " beta=" << format_double(rc.beta) << " beta_source=" << to_string(rc.beta_source)
              << " messages=" << last.messages
              << " elapsed_s=" << format_double(last.elapsed_seconds) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "solve: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace hydra
