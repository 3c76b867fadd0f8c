// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rvvtune/codegen_c.hpp"
#include "rvvtune/error.hpp"
#include "rvvtune/lowering.hpp"
#include "rvvtune/report.hpp"
#include "rvvtune/tuner.hpp"
#include "rvvtune/workload.hpp"

namespace rvvtune {

namespace {

namespace fs = std::filesystem;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string schedule_hash(const ScheduleTrace& trace) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%08llx",
                static_cast<unsigned long long>(fnv1a(trace.str()) &
                                                0xFFFFFFFFull));
  return buf;
}

void merge_trace(ExecTrace& into, const ExecTrace& from) {
  for (const auto& [op, n] : from.counts) into.counts[op] += n;
  for (std::size_t i = 0; i < kNumCategories; ++i)
    into.category_counts[i] += from.category_counts[i];
  into.total_cycles += from.total_cycles;
  into.total_instructions += from.total_instructions;
  into.static_instruction_count += from.static_instruction_count;
}

std::vector<DType> graph_dtypes(const WorkloadGraph& graph) {
  std::vector<DType> out;
  for (const auto& op : graph.ops)
    if (std::find(out.begin(), out.end(), op.in_dtype) == out.end())
      out.push_back(op.in_dtype);
  return out;
}

LoopNest nest_for(const TensorOpSpec& spec) {
  return spec.kind == OpKind::MatMul ? build_matmul_nest(spec)
                                     : build_macc_nest(spec);
}

/// Best candidates per op, honoring the graph budget rule for multi-op
/// workloads (a single op is plain tune_op).
std::vector<TuneResult> tune_descriptor(const WorkloadDescriptor& desc,
                                        const Registry& registry) {
  if (desc.graph.ops.size() == 1)
    return {tune_op(desc.graph.ops[0], registry, desc.machine, desc.tuner)};
  GraphTuneResult graph =
      tune_graph(desc.graph, registry, desc.machine, desc.tuner);
  return std::move(graph.per_op);
}

Candidate reevaluate(const TensorOpSpec& spec, const ScheduleTrace& trace,
                     const Registry& registry, const MachineConfig& machine,
                     std::uint64_t seed) {
  const LoopNest nest = nest_for(spec);
  const BufferMap inputs = make_workload_inputs(spec, seed);
  BufferMap scratch = make_buffer_map(nest);
  for (const auto& [name, bytes] : inputs) scratch[name] = bytes;
  evaluate_nest(nest, scratch);
  return evaluate_candidate(trace, nest, registry, machine, inputs,
                            scratch.at(nest.output_buffer().name));
}

int cmd_tune(const WorkloadDescriptor& desc, const std::string& out_dir) {
  const Registry registry =
      Registry::build(desc.machine, graph_dtypes(desc.graph));
  const auto results = tune_descriptor(desc, registry);

  fs::create_directories(out_dir);
  std::vector<ReportRow> rows;
  std::vector<HistoryRow> history;  // per-op sections, trial ids restart
  SavedSchedule sched;
  sched.workload = desc.graph.name;

  for (std::size_t i = 0; i < desc.graph.ops.size(); ++i) {
    const TensorOpSpec& spec = desc.graph.ops[i];
    const TuneResult& r = results[i];
    const std::string fp = spec.fingerprint();
    sched.ops.emplace_back(fp, r.best.trace);
    history.insert(history.end(), r.history.begin(), r.history.end());

    const Candidate scalar = scalar_baseline(spec, registry, desc.machine);
    rows.push_back(ReportRow::from_candidate("non-tuned", fp, scalar));
    std::optional<Candidate> rowstore;
    if (spec.kind == OpKind::MatMul) {
      rowstore = baseline_schedules(spec, registry, desc.machine).rowstore;
      rows.push_back(ReportRow::from_candidate("rowstore", fp, *rowstore));
    }
    ReportRow tuned = ReportRow::from_candidate("tuned-RVV", fp, r.best);
    tuned.schedule_desc = r.best.trace.variant.has_value()
                              ? r.best.trace.variant->str()
                              : std::string("scalar");
    if (rowstore.has_value() &&
        rowstore->exec_trace.static_instruction_count > 0) {
      tuned.code_size_reduction_perc =
          code_size_reduction(r.best.exec_trace.static_instruction_count,
                              rowstore->exec_trace.static_instruction_count);
    }
    rows.push_back(tuned);

    // emitted C: the scalar reference and, for tensorized bests, the RVV
    // kernel
    const LoopNest nest = nest_for(spec);
    const EmittedSource scalar_src = emit_scalar_c(nest);
    write_text_file(out_dir + "/" + fp + "_scalar.c", scalar_src.text);
    if (r.best.trace.variant.has_value()) {
      LoopNest scheduled = apply_schedule(nest, r.best.trace);
      scheduled = tensorize_block(
          scheduled, *registry.find(*r.best.trace.variant));
      const EmittedSource rvv = emit_rvv_c(scheduled, registry, desc.machine);
      write_text_file(
          out_dir + "/" + fp + "_" + schedule_hash(r.best.trace) + ".c",
          rvv.text);
    }
  }

  write_text_file(out_dir + "/results.csv", results_csv(rows));
  write_text_file(out_dir + "/history.csv", history_csv(history));
  save_schedule(sched, out_dir + "/schedule.json");
  std::cout << render_summary(rows);
  std::cout << "wrote " << out_dir << "/results.csv, history.csv, "
            << "schedule.json and emitted C files\n";
  return 0;
}

int cmd_eval(const WorkloadDescriptor& desc, const std::string& sched_path) {
  const Registry registry =
      Registry::build(desc.machine, graph_dtypes(desc.graph));
  const SavedSchedule sched = load_schedule(sched_path);
  if (sched.ops.size() != desc.graph.ops.size())
    throw ValidationError("schedule has " + std::to_string(sched.ops.size()) +
                          " ops, workload has " +
                          std::to_string(desc.graph.ops.size()));
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < desc.graph.ops.size(); ++i) {
    const TensorOpSpec& spec = desc.graph.ops[i];
    if (sched.ops[i].first != spec.fingerprint())
      throw ValidationError("schedule op " + std::to_string(i) + " is for " +
                            sched.ops[i].first + ", workload op is " +
                            spec.fingerprint());
    const Candidate cand = reevaluate(spec, sched.ops[i].second, registry,
                                      desc.machine, desc.tuner.seed);
    if (!cand.valid)
      throw ValidationError("saved schedule for " + spec.fingerprint() +
                            " no longer verifies against the reference");
    total += cand.cycles;
    std::cout << spec.fingerprint() << ": " << cand.cycles << " cycles\n";
    std::cout << trace_csv(cand.exec_trace);
  }
  if (desc.graph.ops.size() > 1)
    std::cout << "total: " << total << " cycles\n";
  return 0;
}

int cmd_trace(const WorkloadDescriptor& desc, const std::string& type,
              const std::string& out_dir) {
  const Registry registry =
      Registry::build(desc.machine, graph_dtypes(desc.graph));
  ExecTrace merged;
  if (type == "scalar") {
    for (const auto& op : desc.graph.ops)
      merge_trace(merged,
                  scalar_baseline(op, registry, desc.machine).exec_trace);
  } else if (type == "rowstore") {
    for (const auto& op : desc.graph.ops) {
      if (op.kind != OpKind::MatMul)
        throw ValidationError(
            "the row-store baseline is defined for matmul ops only");
      merge_trace(
          merged,
          baseline_schedules(op, registry, desc.machine).rowstore.exec_trace);
    }
  } else if (type == "tuned") {
    for (const auto& r : tune_descriptor(desc, registry))
      merge_trace(merged, r.best.exec_trace);
  } else {
    throw ValidationError("--type must be one of tuned, rowstore, scalar");
  }
  const std::string csv = trace_csv(merged);
  std::cout << csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text_file(out_dir + "/trace.csv", csv);
  }
  return 0;
}

int cmd_codegen(const WorkloadDescriptor& desc, const std::string& sched_path,
                const std::string& out_dir) {
  const Registry registry =
      Registry::build(desc.machine, graph_dtypes(desc.graph));
  const SavedSchedule sched = load_schedule(sched_path);
  if (sched.ops.size() != desc.graph.ops.size())
    throw ValidationError("schedule/workload op count mismatch");
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < desc.graph.ops.size(); ++i) {
    const TensorOpSpec& spec = desc.graph.ops[i];
    const ScheduleTrace& trace = sched.ops[i].second;
    const LoopNest nest = nest_for(spec);
    const std::string stem =
        spec.fingerprint() + "_" + schedule_hash(trace);
    if (trace.variant.has_value()) {
      const IntrinsicVariant* variant = registry.find(*trace.variant);
      if (variant == nullptr)
        throw ValidationError("schedule uses unregistered variant " +
                              trace.variant->str());
      LoopNest scheduled = tensorize_block(apply_schedule(nest, trace),
                                           *variant);
      write_text_file(out_dir + "/" + stem + ".c",
                      emit_rvv_c(scheduled, registry, desc.machine).text);
    } else {
      const LoopNest scheduled = apply_schedule(nest, trace);
      write_text_file(out_dir + "/" + stem + ".c",
                      emit_scalar_c(scheduled).text);
    }
    std::cout << "wrote " << out_dir << "/" << stem << ".c\n";
  }
  return 0;
}

int cmd_registry(std::int64_t vlen, const std::string& dtype_str) {
  const MachineConfig machine = MachineConfig::make(vlen);
  const DType dtype = parse_dtype(dtype_str);
  std::cout << "kind,dtype,acc_dtype,vl,j,src_lmul,widen_factor\n";
  for (const auto& v : enumerate_variants(machine, dtype)) {
    std::cout << intrinsic_kind_name(v.kind) << "," << dtype_name(v.in_dtype)
              << "," << dtype_name(v.acc_dtype) << "," << v.vl << ",";
    if (v.kind == IntrinsicKind::MultiVMul)
      std::cout << v.j;
    std::cout << "," << v.src_lmul << "," << v.widen_factor << "\n";
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"rvvtune: schedule autotuner for RVV tensor kernels"};
  app.require_subcommand(1);
  app.fallthrough();

  // global overrides
  DescriptorOverrides ov;
  std::int64_t ov_seed = -1, ov_trials = -1, ov_vlen = -1, ov_dlen = -1;
  app.add_option("--seed", ov_seed, "override the tuner seed");
  app.add_option("--trials", ov_trials, "override the trial budget");
  app.add_option("--vlen", ov_vlen, "override VLEN (bits)");
  app.add_option("--dlen", ov_dlen, "override DLEN (bits)");

  std::string workload_path, schedule_path, out_dir = "rvvtune_out";
  std::string trace_type = "tuned";

  CLI::App* tune = app.add_subcommand("tune", "search schedules and report");
  tune->add_option("workload", workload_path, "workload JSON file")
      ->required();
  tune->add_option("--out", out_dir, "output directory");

  CLI::App* eval = app.add_subcommand("eval", "re-evaluate a saved schedule");
  eval->add_option("workload", workload_path, "workload JSON file")
      ->required();
  eval->add_option("--schedule", schedule_path, "schedule JSON file")
      ->required();

  CLI::App* trace = app.add_subcommand("trace", "emit a trace breakdown CSV");
  trace->add_option("workload", workload_path, "workload JSON file")
      ->required();
  trace->add_option("--type", trace_type, "tuned, rowstore, or scalar");
  std::string trace_out;
  trace->add_option("--out", trace_out, "also write trace.csv here");

  CLI::App* codegen =
      app.add_subcommand("codegen", "emit C for a saved schedule");
  codegen->add_option("workload", workload_path, "workload JSON file")
      ->required();
  codegen->add_option("--schedule", schedule_path, "schedule JSON file")
      ->required();
  codegen->add_option("--out", out_dir, "output directory");

  CLI::App* registry = app.add_subcommand("registry", "dump variant table");
  std::int64_t reg_vlen = 0;
  std::string reg_dtype;
  registry->add_option("--vlen", reg_vlen, "VLEN in bits")->required();
  registry->add_option("--dtype", reg_dtype, "input dtype")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (registry->parsed()) return cmd_registry(reg_vlen, reg_dtype);

    WorkloadDescriptor desc = parse_workload(workload_path);
    if (ov_seed >= 0) ov.seed = static_cast<std::uint64_t>(ov_seed);
    if (ov_trials >= 0) ov.trials = ov_trials;
    if (ov_vlen >= 0) ov.vlen = ov_vlen;
    if (ov_dlen >= 0) ov.dlen = ov_dlen;
    apply_overrides(desc, ov);

    if (tune->parsed()) return cmd_tune(desc, out_dir);
    if (eval->parsed()) return cmd_eval(desc, schedule_path);
    if (trace->parsed()) return cmd_trace(desc, trace_type, trace_out);
    if (codegen->parsed()) return cmd_codegen(desc, schedule_path, out_dir);
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace rvvtune
