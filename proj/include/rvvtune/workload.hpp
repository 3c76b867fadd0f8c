// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rvvtune/loop_nest.hpp"
#include "rvvtune/machine.hpp"
#include "rvvtune/tensor_op.hpp"
#include "rvvtune/tuner.hpp"

namespace rvvtune {

/// Parsed workload file: ops + machine + tuner settings, with defaults
/// applied (trials=100, dlen=vlen/2, int8 matmuls get default requant).
struct WorkloadDescriptor {
  WorkloadGraph graph;
  MachineConfig machine;
  TunerConfig tuner;
};

/// Strict JSON parsing: unknown keys are rejected with the JSON path of
/// the offending field; all invariants validated. Throws ValidationError.
WorkloadDescriptor parse_workload(const std::string& path);
WorkloadDescriptor parse_workload_text(const std::string& json_text);

/// CLI overrides applied on top of a parsed descriptor.
struct DescriptorOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::optional<std::int64_t> vlen;
  std::optional<std::int64_t> dlen;
};
void apply_overrides(WorkloadDescriptor& desc, const DescriptorOverrides& ov);

// ---- schedule persistence -------------------------------------------------

struct SavedSchedule {
  std::string workload;
  std::vector<std::pair<std::string, ScheduleTrace>> ops;  // fingerprint, trace
};

std::string schedule_to_json(const SavedSchedule& sched);
SavedSchedule schedule_from_json(const std::string& json_text);
SavedSchedule load_schedule(const std::string& path);
void save_schedule(const SavedSchedule& sched, const std::string& path);

}  // namespace rvvtune
