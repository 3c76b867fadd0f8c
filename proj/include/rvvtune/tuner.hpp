// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rvvtune/emulator.hpp"
#include "rvvtune/intrinsic.hpp"
#include "rvvtune/loop_nest.hpp"

namespace rvvtune {

struct TunerConfig {
  std::int64_t trials = 100;
  std::int64_t population = 16;
  double mutation_rate = 0.3;
  std::uint64_t seed = 0;
  std::int64_t min_per_op = 10;  // graph tuning floor per op

  void ensure_valid() const;
};

/// One evaluated schedule. Invalid candidates (failed lowering or output
/// verification) keep infinite cost and still consume budget.
struct Candidate {
  ScheduleTrace trace;
  std::uint64_t cycles = kInvalidCycles;
  ExecTrace exec_trace;
  bool valid = false;

  static constexpr std::uint64_t kInvalidCycles = ~std::uint64_t{0};
};

struct HistoryRow {
  std::int64_t trial = 0;
  std::uint64_t cycles = 0;
  std::uint64_t best_so_far = 0;
  bool valid = false;
  std::int64_t variant_vl = 0;  // 0 for scalar
  std::int64_t variant_j = 0;
};

struct TuneResult {
  Candidate best;
  std::vector<HistoryRow> history;
};

struct GraphTuneResult {
  std::vector<TuneResult> per_op;
  std::uint64_t total_cycles = 0;
};

/// Deterministic decision source. Sampling draws indices through this so a
/// recorded decision stream can be replayed (optionally resampling marked
/// positions) to reconstruct or mutate a trace.
class DecisionStream {
 public:
  DecisionStream(std::mt19937_64& rng);  // record fresh draws
  DecisionStream(std::mt19937_64& rng, std::vector<std::uint64_t> recorded,
                 std::vector<bool> resample);

  /// Uniform draw in [0, bound); consumes the recorded value unless the
  /// position is marked for resampling.
  std::uint64_t draw(std::uint64_t bound);

  const std::vector<std::uint64_t>& record() const { return record_; }

 private:
  std::mt19937_64& rng_;
  std::vector<std::uint64_t> recorded_;
  std::vector<bool> resample_;
  std::vector<std::uint64_t> record_;
  std::size_t pos_ = 0;
};

/// Samples a variant (or scalar) uniformly among the variants able to match
/// this nest, then perfect-tile factorizations and a legal loop order. The
/// returned trace's seed_decisions replay to the identical trace.
ScheduleTrace sample_trace(const LoopNest& nest, const Registry& registry,
                           std::mt19937_64& rng);

/// Re-samples each recorded decision with probability mutation_rate;
/// constraint-consistent by construction (retries bounded at 100, then
/// returns the parent).
ScheduleTrace mutate_trace(const ScheduleTrace& parent, const LoopNest& nest,
                           const Registry& registry, std::mt19937_64& rng,
                           double mutation_rate);

/// The scalar identity trace and, when any variant matches, the greedy
/// largest-VL tensorized trace (largest J first).
ScheduleTrace scalar_identity_trace(const LoopNest& nest,
                                    const Registry& registry);
std::optional<ScheduleTrace> greedy_vector_trace(const LoopNest& nest,
                                                 const Registry& registry);

/// Applies the schedule, tensorizes, lowers and runs the candidate on the
/// emulator with the given inputs, then verifies the output buffer against
/// `reference_output` (bit-exact for integers, norm-relative 1e-4 for
/// float32, 1e-2 for float16). Failures of any stage yield an invalid
/// candidate, never an exception.
Candidate evaluate_candidate(const ScheduleTrace& trace, const LoopNest& nest,
                             const Registry& registry,
                             const MachineConfig& machine,
                             const BufferMap& inputs,
                             const std::vector<std::uint8_t>& reference_output);

/// Evolutionary search: seeded initial population (scalar identity always,
/// greedy vector trace when available, random samples), then select the
/// top `population` by cycles and refill with mutants until exactly
/// `trials` evaluations ran. History is per-trial with non-increasing
/// best-so-far.
TuneResult tune_op(const TensorOpSpec& spec, const Registry& registry,
                   const MachineConfig& machine, const TunerConfig& config);

/// Splits the trial budget equally across ops (remainder to the earliest
/// ops) and tunes each independently. Throws ConfigError when
/// trials < min_per_op * |ops|.
GraphTuneResult tune_graph(const WorkloadGraph& graph, const Registry& registry,
                           const MachineConfig& machine,
                           const TunerConfig& config);

/// Per-op budgets used by tune_graph (exposed for reporting).
std::vector<std::int64_t> graph_budgets(std::int64_t trials,
                                        std::size_t num_ops,
                                        std::int64_t min_per_op);

struct BaselineSchedules {
  Candidate scalar;
  Candidate rowstore;
};

/// The non-tuned scalar candidate and the row-store baseline, evaluated and
/// verified on the same inputs as tuned candidates. MatMul only.
BaselineSchedules baseline_schedules(const TensorOpSpec& spec,
                                     const Registry& registry,
                                     const MachineConfig& machine);

/// The scalar baseline alone (defined for every op kind).
Candidate scalar_baseline(const TensorOpSpec& spec, const Registry& registry,
                          const MachineConfig& machine);

}  // namespace rvvtune
