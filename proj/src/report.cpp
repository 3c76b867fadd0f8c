// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "rvvtune/error.hpp"

namespace rvvtune {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

double code_size_reduction(std::uint64_t tuned_static,
                           std::uint64_t rowstore_static) {
  if (rowstore_static == 0) return 0.0;
  return (1.0 - static_cast<double>(tuned_static) /
                    static_cast<double>(rowstore_static)) *
         100.0;
}

ReportRow ReportRow::from_candidate(const std::string& type,
                                    const std::string& workload,
                                    const Candidate& cand) {
  ReportRow row;
  row.type = type;
  row.workload = workload;
  row.latency_cycles = cand.cycles;
  const ExecTrace& t = cand.exec_trace;
  row.load_perc = t.category_percent(Category::Load);
  row.store_perc = t.category_percent(Category::Store);
  row.reduction_perc = t.category_percent(Category::Reduction);
  row.elementwise_perc = t.category_percent(Category::MulAdd);
  row.configuration_perc = t.category_percent(Category::Configuration);
  row.other_perc = t.category_percent(Category::Others);
  return row;
}

std::string results_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  os << "type,workload,latency_cycles,rvv_load_perc,rvv_store_perc,"
        "rvv_reduction_perc,rvv_elementwise_perc,rvv_configuration_perc,"
        "rvv_other_perc,code_size_reduction_perc\n";
  for (const auto& r : rows) {
    os << r.type << "," << r.workload << "," << r.latency_cycles << ","
       << fmt(r.load_perc) << "," << fmt(r.store_perc) << ","
       << fmt(r.reduction_perc) << "," << fmt(r.elementwise_perc) << ","
       << fmt(r.configuration_perc) << "," << fmt(r.other_perc) << ",";
    if (r.code_size_reduction_perc.has_value())
      os << fmt(*r.code_size_reduction_perc);
    os << "\n";
  }
  return os.str();
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::ostringstream os;
  os << "trial,cycles,best_so_far,valid,variant_vl,variant_j\n";
  for (const auto& r : rows) {
    os << r.trial << "," << r.cycles << "," << r.best_so_far << ","
       << (r.valid ? 1 : 0) << "," << r.variant_vl << "," << r.variant_j
       << "\n";
  }
  return os.str();
}

std::string trace_csv(const ExecTrace& trace) {
  std::ostringstream os;
  os << "category,count,percent\n";
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    const Category c = static_cast<Category>(i);
    os << category_name(c) << "," << trace.category(c) << ","
       << fmt(trace.category_percent(c)) << "\n";
  }
  os << "total_cycles," << trace.total_cycles << ",\n";
  os << "total_instructions," << trace.total_instructions << ",\n";
  os << "static_instruction_count," << trace.static_instruction_count << ",\n";
  return os.str();
}

std::string render_summary(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  // pair tuned rows with their baselines by workload name
  for (const auto& tuned : rows) {
    if (tuned.type != "tuned-RVV") continue;
    const ReportRow* scalar = nullptr;
    const ReportRow* rowstore = nullptr;
    for (const auto& r : rows) {
      if (r.workload != tuned.workload) continue;
      if (r.type == "non-tuned") scalar = &r;
      if (r.type == "rowstore") rowstore = &r;
    }
    os << tuned.workload << ": tuned " << tuned.latency_cycles << " cycles";
    if (!tuned.schedule_desc.empty()) os << " [" << tuned.schedule_desc << "]";
    if (scalar != nullptr && scalar->latency_cycles > 0) {
      const double speedup =
          (1.0 - static_cast<double>(tuned.latency_cycles) /
                     static_cast<double>(scalar->latency_cycles)) *
          100.0;
      os << ", " << fmt(speedup) << "% faster than the scalar baseline ("
         << scalar->latency_cycles << " cycles)";
    }
    if (rowstore != nullptr && tuned.code_size_reduction_perc.has_value()) {
      os << ", code-size reduction vs row-store: "
         << fmt(*tuned.code_size_reduction_perc) << "%";
    }
    os << "\n";
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace rvvtune
