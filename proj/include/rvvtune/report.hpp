// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rvvtune/program.hpp"
#include "rvvtune/tuner.hpp"

namespace rvvtune {

/// One results.csv row. Percentage columns are shares of executed vector
/// instructions and sum to 100 (+-0.1) whenever any vector instruction ran.
struct ReportRow {
  std::string type;      // "non-tuned" | "rowstore" | "tuned-RVV"
  std::string workload;  // op fingerprint
  std::uint64_t latency_cycles = 0;
  double load_perc = 0, store_perc = 0, reduction_perc = 0,
         elementwise_perc = 0, configuration_perc = 0, other_perc = 0;
  std::optional<double> code_size_reduction_perc;  // tuned rows only
  std::string schedule_desc;  // summary text only, not a CSV column

  static ReportRow from_candidate(const std::string& type,
                                  const std::string& workload,
                                  const Candidate& cand);
};

/// (1 - tuned/rowstore) * 100 over static instruction counts.
double code_size_reduction(std::uint64_t tuned_static,
                           std::uint64_t rowstore_static);

/// Stable column order:
/// type,workload,latency_cycles,rvv_load_perc,rvv_store_perc,
/// rvv_reduction_perc,rvv_elementwise_perc,rvv_configuration_perc,
/// rvv_other_perc,code_size_reduction_perc
std::string results_csv(const std::vector<ReportRow>& rows);

/// trial,cycles,best_so_far,valid,variant_vl,variant_j
std::string history_csv(const std::vector<HistoryRow>& rows);

/// category,count,percent rows for the six categories followed by
/// total_cycles / total_instructions / static_instruction_count rows.
std::string trace_csv(const ExecTrace& trace);

/// Human-readable summary: per-op speedup of tuned vs the scalar baseline
/// ((1 - tuned/scalar) * 100) and code-size reduction of tuned vs rowstore
/// static instruction counts.
std::string render_summary(const std::vector<ReportRow>& rows);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace rvvtune
