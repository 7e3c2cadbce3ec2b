#pragma once

// The Hydra iteration over c simulated nodes with column-partitioned data.
// Every iteration: each node draws a uniform tau-subset of its own block,
// computes the closed-form prox steps from its residual replica, applies them
// to its locally owned x-block, and the replicas are re-synchronized by one
// of two protocols:
//
//   RA  - reduce-all: the per-node residual deltas are summed (in node order)
//         and the sum is added to every replica; counted as a star
//         (gather to node 0, broadcast back), 2(c-1) messages per iteration.
//   ASL - asynchronous ring: each node sends one cumulative delta
//         dG_{k,l} = dG_{k-1,l-} - dg_{k-c,l} + dg_{k,l} to its successor and
//         updates g_{k+1,l} = g_{k,l} + dg_{k,l} + dG_{k,l-} - dg_{k-c+1,l};
//         c messages per iteration, information needs c-1 iterations to
//         traverse the ring.
//
// Lockstep execution runs nodes sequentially in node order and is bitwise
// reproducible; threaded execution parallelizes the per-node compute phase
// and produces the same iterate sequence because per-node accumulation order
// and the cross-node reduce order are fixed.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hydra/common.hpp"
#include "hydra/io.hpp"
#include "hydra/loss.hpp"
#include "hydra/partition.hpp"
#include "hydra/problem.hpp"
#include "hydra/regularizer.hpp"
#include "hydra/sampling.hpp"

namespace hydra {

enum class Protocol { ReduceAll, AsyncRing };
enum class Execution { Lockstep, Threaded };
enum class BetaSource { User, Auto, DoubleBeta1 };

inline const char* to_string(Protocol p) {
  return p == Protocol::ReduceAll ? "ra" : "asl";
}
inline const char* to_string(Execution e) {
  return e == Execution::Lockstep ? "lockstep" : "threaded";
}
inline const char* to_string(BetaSource b) {
  switch (b) {
    case BetaSource::User: return "user";
    case BetaSource::Auto: return "auto";
    case BetaSource::DoubleBeta1: return "double-beta1";
  }
  return "?";
}

struct MessageCounters {
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t reduce_ops = 0;
};

struct NodeState {
  std::size_t id = 0;
  std::span<const std::size_t> block;  // owned coordinates, ascending
  std::vector<double> x;               // owned x-block, aligned with `block`
  std::vector<double> residual;        // replica of g, length n
  std::vector<double> delta;           // dg of the last completed iteration
  MessageCounters messages;
};

// ASL ring state for all nodes: per-node history ring dg_{t,l} for
// t in [k-c, k] (c+1 slots, zero for t < 0) plus the in-flight dG messages.
class RingSync {
 public:
  RingSync() = default;
  RingSync(std::size_t nodes, std::size_t residual_dim)
      : c_(nodes),
        n_(residual_dim),
        history_(nodes, std::vector<std::vector<double>>(nodes + 1,
                                                         std::vector<double>(residual_dim, 0.0))),
        inbox_(nodes, std::vector<double>(residual_dim, 0.0)),
        outbox_(nodes, std::vector<double>(residual_dim, 0.0)),
        increment_(nodes, std::vector<double>(residual_dim, 0.0)) {}

  std::uint64_t round() const { return k_; }

  // One protocol round with deltas[l] = dg_{k,l}. Returns increment[l] to be
  // added to node l's replica. All sends are computed before any delivery,
  // so node order cannot matter.
  const std::vector<std::vector<double>>& advance(
      const std::vector<std::vector<double>>& deltas) {
    require(deltas.size() == c_, "ring round needs one delta per node");
    const std::size_t m = c_ + 1;
    const std::size_t slot_now = static_cast<std::size_t>(k_ % m);
    const std::size_t slot_kc = static_cast<std::size_t>((k_ + 1) % m);      // t = k - c
    const std::size_t slot_kc1 = static_cast<std::size_t>((k_ + 2) % m);     // t = k - c + 1
    for (std::size_t l = 0; l < c_; ++l) history_[l][slot_now] = deltas[l];
    for (std::size_t l = 0; l < c_; ++l) {
      // dG_{k,l} = dG_{k-1,l-} - dg_{k-c,l} + dg_{k,l}
      const std::vector<double>& oldest = history_[l][slot_kc];
      for (std::size_t r = 0; r < n_; ++r)
        outbox_[l][r] = inbox_[l][r] - oldest[r] + deltas[l][r];
    }
    for (std::size_t l = 0; l < c_; ++l) {
      const std::size_t pred = (l + c_ - 1) % c_;
      // g_{k+1,l} = g_{k,l} + dg_{k,l} + dG_{k,l-} - dg_{k-c+1,l}
      const std::vector<double>& drop = history_[l][slot_kc1];
      for (std::size_t r = 0; r < n_; ++r)
        increment_[l][r] = deltas[l][r] + outbox_[pred][r] - drop[r];
    }
    for (std::size_t l = 0; l < c_; ++l) inbox_[l] = outbox_[(l + c_ - 1) % c_];
    ++k_;
    return increment_;
  }

 private:
  std::size_t c_ = 0;
  std::size_t n_ = 0;
  std::uint64_t k_ = 0;
  std::vector<std::vector<std::vector<double>>> history_;  // [node][slot]
  std::vector<std::vector<double>> inbox_;    // dG_{k-1, l-} as known to node l
  std::vector<std::vector<double>> outbox_;   // dG_{k, l} being sent
  std::vector<std::vector<double>> increment_;
};

struct RunConfig {
  Protocol protocol = Protocol::ReduceAll;
  Execution execution = Execution::Lockstep;
  std::size_t tau = 1;
  double beta = 1.0;
  BetaSource beta_source = BetaSource::User;
  std::size_t max_iters = 1000;
  std::size_t eval_every = 10;
  std::uint64_t seed = 0;
  std::optional<double> gap_target;  // stop when L(x)-L* <= target (needs L*)
  double divergence_factor = 1e3;
  std::vector<double> x0;  // empty = zero start
};

struct TraceRecord {
  std::uint64_t iteration = 0;
  double loss = 0.0;
  std::optional<double> gap;
  std::uint64_t messages = 0;  // cumulative sends across all nodes
  double elapsed_seconds = 0.0;
};

struct RunTrace {
  std::vector<TraceRecord> records;
  std::vector<double> final_x;
  std::uint64_t seed = 0;
  double beta = 1.0;
  BetaSource beta_source = BetaSource::User;
  Protocol protocol = Protocol::ReduceAll;
  Execution execution = Execution::Lockstep;
  std::uint64_t iterations_run = 0;
};

class Cluster {
 public:
  // `problem` must outlive the cluster.
  Cluster(const ProblemInstance& problem, Partition partition, RunConfig config)
      : problem_(&problem),
        partition_(std::move(partition)),
        config_(std::move(config)),
        m_diag_(m_diag(problem.A, problem.loss)),
        plan_(partition_, config_.tau, config_.seed) {
    validate_problem(problem);
    require(partition_.dim() == problem.A.cols(), "partition does not cover the matrix columns");
    require(config_.beta >= 1.0, "beta must be at least 1");
    require(config_.eval_every >= 1, "eval_every must be at least 1");
    if (!config_.x0.empty())
      require(config_.x0.size() == problem.A.cols(), "x0 dimension mismatch");

    const std::size_t c = partition_.node_count();
    const std::vector<double> x_full =
        config_.x0.empty() ? std::vector<double>(problem.A.cols(), 0.0) : config_.x0;
    const Residual g0 = init_residual(problem.A, x_full, problem.y, problem.loss);
    nodes_.resize(c);
    for (std::size_t l = 0; l < c; ++l) {
      NodeState& nd = nodes_[l];
      nd.id = l;
      nd.block = partition_.block(l);
      nd.x.resize(nd.block.size());
      for (std::size_t b = 0; b < nd.block.size(); ++b) nd.x[b] = x_full[nd.block[b]];
      nd.residual = g0.g;
      nd.delta.assign(problem.A.rows(), 0.0);
    }
    if (config_.protocol == Protocol::AsyncRing)
      ring_ = RingSync(c, problem.A.rows());
    reduce_sum_.assign(problem.A.rows(), 0.0);
  }

  Cluster(const Cluster&) = delete;
  Cluster& operator=(const Cluster&) = delete;

  std::uint64_t iteration() const { return k_; }
  std::size_t node_count() const { return nodes_.size(); }
  const NodeState& node(std::size_t l) const { return nodes_[l]; }
  const Partition& partition() const { return partition_; }
  const RunConfig& config() const { return config_; }

  // One full Hydra iteration: sample, prox, local apply, synchronize.
  void step() {
    const std::size_t c = nodes_.size();
    if (config_.execution == Execution::Threaded && c > 1) {
      const std::size_t workers = std::min<std::size_t>(
          c, std::max(1u, std::thread::hardware_concurrency()));
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([this, w, workers, c] {
          for (std::size_t l = w; l < c; l += workers) compute_phase(l);
        });
      for (std::thread& t : pool) t.join();
    } else {
      for (std::size_t l = 0; l < c; ++l) compute_phase(l);
    }
    if (config_.protocol == Protocol::ReduceAll)
      synchronize_reduce_all();
    else
      synchronize_ring();
    ++k_;
  }

  std::vector<double> gather_x() const {
    std::vector<double> x(problem_->A.cols(), 0.0);
    for (const NodeState& nd : nodes_)
      for (std::size_t b = 0; b < nd.block.size(); ++b) x[nd.block[b]] = nd.x[b];
    return x;
  }

  // L(x_k). Under RA any replica is the residual of the current iterate; ASL
  // replicas are stale, so the residual is recomputed from the gathered x.
  double evaluate_loss() const {
    double value = 0.0;
    if (config_.protocol == Protocol::ReduceAll) {
      value = loss_value(nodes_[0].residual, problem_->loss);
    } else {
      const std::vector<double> x = gather_x();
      value = loss_value(init_residual(problem_->A, x, problem_->y, problem_->loss));
    }
    for (const NodeState& nd : nodes_) {
      double local = 0.0;
      for (std::size_t b = 0; b < nd.block.size(); ++b)
        local += coord_reg_value(nd.x[b], nd.block[b], problem_->reg);
      value += local;
    }
    return value;
  }

  std::uint64_t total_messages() const {
    std::uint64_t total = 0;
    for (const NodeState& nd : nodes_) total += nd.messages.sent;
    return total;
  }

 private:
  void compute_phase(std::size_t l) {
    NodeState& nd = nodes_[l];
    const auto drawn = plan_.draw(l, k_);
    std::vector<CoordUpdate> updates;
    updates.reserve(drawn.size());
    for (std::size_t i : drawn) {
      const double fp =
          partial_derivative(i, nd.residual, problem_->loss, problem_->A, problem_->y);
      const std::size_t pos = static_cast<std::size_t>(
          std::lower_bound(nd.block.begin(), nd.block.end(), i) - nd.block.begin());
      const double h = prox_step(i, fp, m_diag_[i], config_.beta, nd.x[pos], problem_->reg);
      if (!std::isfinite(h))
        throw NumericError("nonfinite update for coordinate " + std::to_string(i) +
                           " at iteration " + std::to_string(k_));
      nd.x[pos] += h;
      updates.push_back({i, h});
    }
    std::fill(nd.delta.begin(), nd.delta.end(), 0.0);
    accumulate_delta_g(updates, problem_->A, problem_->y, problem_->loss, nd.delta);
  }

  void synchronize_reduce_all() {
    const std::size_t c = nodes_.size();
    std::fill(reduce_sum_.begin(), reduce_sum_.end(), 0.0);
    for (std::size_t l = 0; l < c; ++l) {
      const std::vector<double>& d = nodes_[l].delta;
      for (std::size_t r = 0; r < reduce_sum_.size(); ++r) reduce_sum_[r] += d[r];
    }
    for (NodeState& nd : nodes_) {
      for (std::size_t r = 0; r < reduce_sum_.size(); ++r) nd.residual[r] += reduce_sum_[r];
      nd.messages.reduce_ops += 1;
    }
    if (c > 1) {
      nodes_[0].messages.sent += c - 1;      // broadcast
      nodes_[0].messages.received += c - 1;  // gather
      for (std::size_t l = 1; l < c; ++l) {
        nodes_[l].messages.sent += 1;
        nodes_[l].messages.received += 1;
      }
    }
  }

  void synchronize_ring() {
    const std::size_t c = nodes_.size();
    std::vector<std::vector<double>> deltas;
    deltas.reserve(c);
    for (NodeState& nd : nodes_) deltas.push_back(nd.delta);
    const auto& inc = ring_.advance(deltas);
    for (std::size_t l = 0; l < c; ++l) {
      NodeState& nd = nodes_[l];
      for (std::size_t r = 0; r < nd.residual.size(); ++r) nd.residual[r] += inc[l][r];
      nd.messages.sent += 1;
      nd.messages.received += 1;
    }
  }

  const ProblemInstance* problem_;
  Partition partition_;
  RunConfig config_;
  std::vector<double> m_diag_;
  SamplingPlan plan_;
  std::vector<NodeState> nodes_;
  RingSync ring_;
  std::vector<double> reduce_sum_;
  std::uint64_t k_ = 0;
};

// Outer loop: eval records every eval_every iterations (plus iteration 0 and
// the last one), divergence guard, optional gap-target stop when L* is known.
inline RunTrace run(const ProblemInstance& problem, const Partition& partition,
                    const RunConfig& config) {
  Cluster cluster(problem, partition, config);
  RunTrace trace;
  trace.seed = config.seed;
  trace.beta = config.beta;
  trace.beta_source = config.beta_source;
  trace.protocol = config.protocol;
  trace.execution = config.execution;

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto record = [&](std::uint64_t k) {
    TraceRecord rec;
    rec.iteration = k;
    rec.loss = cluster.evaluate_loss();
    if (problem.optimal_value) rec.gap = rec.loss - *problem.optimal_value;
    rec.messages = cluster.total_messages();
    rec.elapsed_seconds = elapsed();
    trace.records.push_back(rec);
    return rec;
  };

  const double initial_loss = record(0).loss;
  for (std::uint64_t k = 1; k <= config.max_iters; ++k) {
    cluster.step();
    if (k % config.eval_every == 0 || k == config.max_iters) {
      const TraceRecord rec = record(k);
      if (rec.loss > config.divergence_factor * initial_loss)
        throw NumericError("divergence guard: L(x_" + std::to_string(k) + ") = " +
                           format_double(rec.loss) + " exceeds " +
                           format_double(config.divergence_factor) + " * L(x_0) = " +
                           format_double(config.divergence_factor * initial_loss) +
                           "; increase beta");
      if (rec.gap && config.gap_target && *rec.gap <= *config.gap_target) {
        trace.iterations_run = k;
        break;
      }
    }
    trace.iterations_run = k;
  }
  trace.final_x = cluster.gather_x();
  return trace;
}

// CSV columns: iter,loss,gap,msgs_sent,elapsed_s. gap is empty when L* is
// unknown; elapsed_s is empty in lockstep mode, where traces must be bitwise
// reproducible, and holds measured wall time in threaded mode.
inline void save_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open file for writing: " + path);
  out << "# seed=" << trace.seed << "\n";
  out << "# beta=" << format_double(trace.beta) << "\n";
  out << "# beta_source=" << to_string(trace.beta_source) << "\n";
  out << "# protocol=" << to_string(trace.protocol) << "\n";
  out << "# execution=" << to_string(trace.execution) << "\n";
  out << "iter,loss,gap,msgs_sent,elapsed_s\n";
  for (const TraceRecord& rec : trace.records) {
    out << rec.iteration << "," << format_double(rec.loss) << ",";
    if (rec.gap) out << format_double(*rec.gap);
    out << "," << rec.messages << ",";
    if (trace.execution == Execution::Threaded) out << format_double(rec.elapsed_seconds);
    out << "\n";
  }
  if (!out) throw Error("write failed: " + path);
}

}  // namespace hydra
