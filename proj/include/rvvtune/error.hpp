// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace rvvtune {

/// Invalid workload/op/requant parameters.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad machine or tuner configuration (illegal VLEN/SEW/LMUL, budgets, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inconsistent schedule trace (factor products, unknown loops, bad perms).
struct ScheduleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A block does not match the intrinsic definition shape or dtypes.
/// The tuner treats this as a dead candidate, never as a crash.
struct NoMatchError : ScheduleError {
  using ScheduleError::ScheduleError;
};

/// Nest cannot be lowered to an instruction program.
struct LoweringError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Architectural fault during emulation (out-of-bounds access, illegal
/// register overlap, illegal vtype).
struct EmulatorFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failures in the CLI layer.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rvvtune
