// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/tuner.hpp"

#include <algorithm>
#include <sstream>

#include "rvvtune/error.hpp"
#include "rvvtune/lowering.hpp"

namespace rvvtune {

void TunerConfig::ensure_valid() const {
  if (trials < 1) throw ConfigError("tuner trials must be >= 1");
  if (population < 1 || population > trials)
    throw ConfigError("tuner population must be in [1, trials]");
  if (!(mutation_rate > 0.0) || mutation_rate > 1.0)
    throw ConfigError("tuner mutation_rate must be in (0, 1]");
  if (min_per_op < 1) throw ConfigError("tuner min_per_op must be >= 1");
}

DecisionStream::DecisionStream(std::mt19937_64& rng) : rng_(rng) {}

DecisionStream::DecisionStream(std::mt19937_64& rng,
                               std::vector<std::uint64_t> recorded,
                               std::vector<bool> resample)
    : rng_(rng), recorded_(std::move(recorded)), resample_(std::move(resample)) {}

std::uint64_t DecisionStream::draw(std::uint64_t bound) {
  if (bound == 0) throw ScheduleError("decision drawn from an empty set");
  std::uint64_t v;
  if (pos_ < recorded_.size() &&
      (pos_ >= resample_.size() || !resample_[pos_])) {
    v = recorded_[pos_] % bound;
  } else {
    v = rng_() % bound;
  }
  ++pos_;
  record_.push_back(v);
  return v;
}

namespace {

std::vector<std::int64_t> divisors(std::int64_t n) {
  std::vector<std::int64_t> out;
  for (std::int64_t d = 1; d <= n; ++d)
    if (n % d == 0) out.push_back(d);
  return out;
}

/// Variants whose definition can match this nest after a suitable split:
/// dtypes equal and the inner extents (VL | reduction, J | row block)
/// divide the canonical extents. Registry order is preserved, so index 0
/// is the widest variant.
std::vector<const IntrinsicVariant*> capable_variants(const LoopNest& nest,
                                                      const Registry& reg) {
  std::vector<const IntrinsicVariant*> out;
  const TensorOpSpec& spec = nest.spec;
  for (const auto& v : reg.variants()) {
    if (v.in_dtype != spec.in_dtype || v.acc_dtype != spec.acc_dtype) continue;
    if (spec.kind == OpKind::MatMul) {
      if (v.kind != IntrinsicKind::MultiVMul) continue;
      if (spec.k % v.vl != 0 || spec.n % v.j != 0) continue;
    } else {
      if (v.kind != IntrinsicKind::VMacc) continue;
      if (spec.n % v.vl != 0) continue;
    }
    out.push_back(&v);
  }
  return out;
}

/// One or two perfect-tile factors for `extent` (decisions: part count,
/// then a divisor index when splitting).
std::vector<std::int64_t> sample_factors(std::int64_t extent,
                                         DecisionStream& ds) {
  const std::uint64_t parts = 1 + ds.draw(2);
  if (parts == 1) return {extent};
  const auto divs = divisors(extent);
  const std::int64_t d = divs[ds.draw(divs.size())];
  return {d, extent / d};
}

std::vector<LoopId> permute(std::vector<LoopId> ids, DecisionStream& ds) {
  std::vector<LoopId> out;
  while (!ids.empty()) {
    const std::uint64_t pick = ds.draw(ids.size());
    out.push_back(ids[pick]);
    ids.erase(ids.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

ScheduleTrace sample_with_stream(const LoopNest& nest, const Registry& reg,
                                 DecisionStream& ds) {
  const auto capable = capable_variants(nest, reg);
  const std::uint64_t pick = ds.draw(capable.size() + 1);
  const IntrinsicVariant* variant =
      pick < capable.size() ? capable[pick] : nullptr;

  ScheduleTrace trace;
  std::vector<LoopId> outer_ids;
  std::vector<LoopId> forced_tail;

  for (const auto& loop : nest.body.loops) {
    // the tensorized loops reserve their innermost factor (J for the row
    // block, VL for the reduction)
    std::int64_t reserved = 0;
    if (variant != nullptr) {
      if (nest.spec.kind == OpKind::MatMul) {
        if (loop.id == "n") reserved = variant->j;
        if (loop.id == "k") reserved = variant->vl;
      } else if (loop.id == "i") {
        reserved = variant->vl;
      }
    }
    std::vector<std::int64_t> factors;
    if (reserved > 0) {
      const std::int64_t rest = loop.extent / reserved;
      if (rest > 1) factors = sample_factors(rest, ds);
      factors.push_back(reserved);
    } else {
      factors = sample_factors(loop.extent, ds);
    }
    const auto ids = split_loop_ids(loop.id, factors.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const bool is_reserved_inner = reserved > 0 && i + 1 == ids.size();
      if (is_reserved_inner)
        forced_tail.push_back(ids[i]);
      else
        outer_ids.push_back(ids[i]);
    }
    trace.tile_factors[loop.id] = std::move(factors);
  }

  trace.loop_order = permute(std::move(outer_ids), ds);
  // MultiVMul consumes (row block, reduction) as the two innermost loops;
  // VMacc just the reduction
  trace.loop_order.insert(trace.loop_order.end(), forced_tail.begin(),
                          forced_tail.end());
  if (variant != nullptr) trace.variant = variant->key();
  trace.seed_decisions = ds.record();
  return trace;
}

Candidate make_invalid(const ScheduleTrace& trace) {
  Candidate c;
  c.trace = trace;
  c.valid = false;
  c.cycles = Candidate::kInvalidCycles;
  return c;
}

/// cycles, then executed instructions, then the serialized trace.
bool better_than(const Candidate& a, const Candidate& b) {
  if (a.cycles != b.cycles) return a.cycles < b.cycles;
  if (a.exec_trace.total_instructions != b.exec_trace.total_instructions)
    return a.exec_trace.total_instructions < b.exec_trace.total_instructions;
  return a.trace.str() < b.trace.str();
}

}  // namespace

ScheduleTrace sample_trace(const LoopNest& nest, const Registry& registry,
                           std::mt19937_64& rng) {
  DecisionStream ds(rng);
  return sample_with_stream(nest, registry, ds);
}

ScheduleTrace mutate_trace(const ScheduleTrace& parent, const LoopNest& nest,
                           const Registry& registry, std::mt19937_64& rng,
                           double mutation_rate) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<bool> resample(parent.seed_decisions.size(), false);
    for (std::size_t i = 0; i < resample.size(); ++i) {
      const double u =
          static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
      resample[i] = u < mutation_rate;
    }
    try {
      DecisionStream ds(rng, parent.seed_decisions, resample);
      return sample_with_stream(nest, registry, ds);
    } catch (const ScheduleError&) {
      continue;  // re-roll the resample mask
    }
  }
  return parent;
}

ScheduleTrace scalar_identity_trace(const LoopNest& nest,
                                    const Registry& registry) {
  std::mt19937_64 dummy(0);
  const auto capable = capable_variants(nest, registry);
  std::vector<std::uint64_t> decisions(64, 0);
  decisions[0] = capable.size();  // the index one past the variants = scalar
  DecisionStream ds(dummy, decisions, {});
  return sample_with_stream(nest, registry, ds);
}

std::optional<ScheduleTrace> greedy_vector_trace(const LoopNest& nest,
                                                 const Registry& registry) {
  if (capable_variants(nest, registry).empty()) return std::nullopt;
  std::mt19937_64 dummy(0);
  DecisionStream ds(dummy, std::vector<std::uint64_t>(64, 0), {});
  return sample_with_stream(nest, registry, ds);
}

Candidate evaluate_candidate(const ScheduleTrace& trace, const LoopNest& nest,
                             const Registry& registry,
                             const MachineConfig& machine,
                             const BufferMap& inputs,
                             const std::vector<std::uint8_t>& reference_output) {
  Program program;
  try {
    LoopNest scheduled = apply_schedule(nest, trace);
    if (trace.variant.has_value()) {
      const IntrinsicVariant* variant = registry.find(*trace.variant);
      if (variant == nullptr) return make_invalid(trace);
      scheduled = tensorize_block(scheduled, *variant);
    }
    program = lower_nest(scheduled, registry, machine);
  } catch (const ScheduleError&) {
    return make_invalid(trace);
  } catch (const LoweringError&) {
    return make_invalid(trace);
  }

  Candidate cand;
  cand.trace = trace;
  try {
    auto memory = make_memory(program, inputs);
    Emulator emu(machine);
    cand.exec_trace = emu.run_program(program, memory);
    cand.cycles = cand.exec_trace.total_cycles;
    const Buffer& out = nest.output_buffer();
    const auto produced = read_buffer(program, memory, out.name);
    // never keep a miscompiled candidate
    if (is_integer(out.dtype)) {
      cand.valid = produced == reference_output;
    } else {
      const double tol = out.dtype == DType::Float32 ? 1e-4 : 1e-2;
      cand.valid =
          relative_error(out.dtype, produced, reference_output) <= tol;
    }
  } catch (const EmulatorFault&) {
    return make_invalid(trace);
  }
  return cand;
}

namespace {

struct OpContext {
  LoopNest nest;
  BufferMap inputs;
  std::vector<std::uint8_t> reference_output;
};

OpContext make_op_context(const TensorOpSpec& spec, std::uint64_t seed) {
  OpContext ctx;
  ctx.nest = spec.kind == OpKind::MatMul ? build_matmul_nest(spec)
                                         : build_macc_nest(spec);
  ctx.inputs = make_workload_inputs(spec, seed);
  BufferMap scratch = make_buffer_map(ctx.nest);
  for (const auto& [name, bytes] : ctx.inputs) scratch[name] = bytes;
  evaluate_nest(ctx.nest, scratch);
  ctx.reference_output = scratch.at(ctx.nest.output_buffer().name);
  return ctx;
}

}  // namespace

TuneResult tune_op(const TensorOpSpec& spec, const Registry& registry,
                   const MachineConfig& machine, const TunerConfig& config) {
  config.ensure_valid();
  spec.ensure_valid();
  OpContext ctx = make_op_context(spec, config.seed);
  std::mt19937_64 rng(config.seed);

  TuneResult result;
  std::vector<Candidate> evaluated;
  evaluated.reserve(static_cast<std::size_t>(config.trials));
  std::ptrdiff_t best_idx = -1;

  auto evaluate_batch = [&](const std::vector<ScheduleTrace>& batch) {
    for (const auto& trace : batch) {
      Candidate cand = evaluate_candidate(trace, ctx.nest, registry, machine,
                                          ctx.inputs, ctx.reference_output);
      evaluated.push_back(std::move(cand));
      const Candidate& c = evaluated.back();
      if (c.valid &&
          (best_idx < 0 ||
           better_than(c, evaluated[static_cast<std::size_t>(best_idx)])))
        best_idx = static_cast<std::ptrdiff_t>(evaluated.size()) - 1;
      HistoryRow row;
      row.trial = static_cast<std::int64_t>(evaluated.size());
      row.cycles = c.cycles == Candidate::kInvalidCycles ? 0 : c.cycles;
      row.best_so_far =
          best_idx >= 0 ? evaluated[static_cast<std::size_t>(best_idx)].cycles
                        : 0;
      row.valid = c.valid;
      if (c.trace.variant.has_value()) {
        row.variant_vl = c.trace.variant->vl;
        row.variant_j = c.trace.variant->j;
      }
      result.history.push_back(row);
    }
  };

  // generation 0: the scalar fallback, the widest tensorized schedule when
  // one matches, then fresh samples
  std::vector<ScheduleTrace> init;
  init.push_back(scalar_identity_trace(ctx.nest, registry));
  if (auto greedy = greedy_vector_trace(ctx.nest, registry);
      greedy.has_value())
    init.push_back(std::move(*greedy));
  const std::int64_t init_target = std::min(config.population, config.trials);
  while (static_cast<std::int64_t>(init.size()) < init_target)
    init.push_back(sample_trace(ctx.nest, registry, rng));
  if (static_cast<std::int64_t>(init.size()) > config.trials)
    init.resize(static_cast<std::size_t>(config.trials));
  evaluate_batch(init);

  while (static_cast<std::int64_t>(evaluated.size()) < config.trials) {
    std::vector<const Candidate*> survivors;
    for (const auto& c : evaluated)
      if (c.valid) survivors.push_back(&c);
    std::sort(survivors.begin(), survivors.end(),
              [](const Candidate* a, const Candidate* b) {
                return better_than(*a, *b);
              });
    if (survivors.size() > static_cast<std::size_t>(config.population))
      survivors.resize(static_cast<std::size_t>(config.population));
    if (survivors.empty())
      throw ConfigError(
          "no valid candidate found; increase the trial budget");

    const std::int64_t remaining =
        config.trials - static_cast<std::int64_t>(evaluated.size());
    const std::int64_t batch_size = std::min(config.population, remaining);
    std::vector<ScheduleTrace> batch;
    for (std::int64_t i = 0; i < batch_size; ++i) {
      const Candidate* parent = survivors[i % survivors.size()];
      batch.push_back(mutate_trace(parent->trace, ctx.nest, registry, rng,
                                   config.mutation_rate));
    }
    evaluate_batch(batch);
  }

  if (best_idx < 0)
    throw ConfigError("no valid candidate in " +
                      std::to_string(config.trials) +
                      " trials; increase the trial budget");
  result.best = evaluated[static_cast<std::size_t>(best_idx)];
  return result;
}

std::vector<std::int64_t> graph_budgets(std::int64_t trials,
                                        std::size_t num_ops,
                                        std::int64_t min_per_op) {
  if (num_ops == 0) throw ConfigError("graph has no ops");
  const std::int64_t required =
      min_per_op * static_cast<std::int64_t>(num_ops);
  if (trials < required) {
    std::ostringstream os;
    os << "graph tuning needs at least " << required << " trials ("
       << num_ops << " ops x " << min_per_op << " candidates each), got "
       << trials;
    throw ConfigError(os.str());
  }
  std::vector<std::int64_t> budgets(num_ops, trials / static_cast<std::int64_t>(num_ops));
  const std::int64_t rem = trials % static_cast<std::int64_t>(num_ops);
  for (std::int64_t i = 0; i < rem; ++i) budgets[static_cast<std::size_t>(i)] += 1;
  return budgets;
}

GraphTuneResult tune_graph(const WorkloadGraph& graph, const Registry& registry,
                           const MachineConfig& machine,
                           const TunerConfig& config) {
  config.ensure_valid();
  graph.ensure_valid();
  const auto budgets =
      graph_budgets(config.trials, graph.ops.size(), config.min_per_op);

  GraphTuneResult result;
  for (std::size_t i = 0; i < graph.ops.size(); ++i) {
    TunerConfig op_config = config;
    op_config.trials = budgets[i];
    op_config.population = std::min(config.population, budgets[i]);
    op_config.seed = config.seed + i;
    result.per_op.push_back(
        tune_op(graph.ops[i], registry, machine, op_config));
    result.total_cycles += result.per_op.back().best.cycles;
  }
  return result;
}

Candidate scalar_baseline(const TensorOpSpec& spec, const Registry& registry,
                          const MachineConfig& machine) {
  OpContext ctx = make_op_context(spec, /*seed=*/0);
  return evaluate_candidate(scalar_identity_trace(ctx.nest, registry),
                            ctx.nest, registry, machine, ctx.inputs,
                            ctx.reference_output);
}

BaselineSchedules baseline_schedules(const TensorOpSpec& spec,
                                     const Registry& registry,
                                     const MachineConfig& machine) {
  if (spec.kind != OpKind::MatMul)
    throw ConfigError("baseline_schedules requires a matmul spec");
  BaselineSchedules out;
  out.scalar = scalar_baseline(spec, registry, machine);

  OpContext ctx = make_op_context(spec, /*seed=*/0);
  Program program = lower_rowstore(ctx.nest, registry, machine);
  auto memory = make_memory(program, ctx.inputs);
  Emulator emu(machine);
  Candidate rowstore;
  rowstore.trace = ScheduleTrace::identity(ctx.nest);
  rowstore.exec_trace = emu.run_program(program, memory);
  rowstore.cycles = rowstore.exec_trace.total_cycles;
  const auto produced =
      read_buffer(program, memory, ctx.nest.output_buffer().name);
  if (is_integer(ctx.nest.output_buffer().dtype)) {
    rowstore.valid = produced == ctx.reference_output;
  } else {
    const double tol =
        ctx.nest.output_buffer().dtype == DType::Float32 ? 1e-4 : 1e-2;
    rowstore.valid = relative_error(ctx.nest.output_buffer().dtype, produced,
                                    ctx.reference_output) <= tol;
  }
  out.rowstore = rowstore;
  return out;
}

}  // namespace rvvtune
