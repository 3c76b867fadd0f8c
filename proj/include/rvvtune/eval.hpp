// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rvvtune/loop_nest.hpp"

namespace rvvtune {

/// Raw storage per buffer name. Inputs and accumulators arrive filled;
/// outputs are written by evaluation/emulation.
using BufferMap = std::map<std::string, std::vector<std::uint8_t>>;

/// Zero-filled storage for every nest buffer.
BufferMap make_buffer_map(const LoopNest& nest);

/// Deterministic pseudo-random contents for the op's input and accumulator
/// buffers (int8 full range, int32 bias in [-1000, 1000], floats in [-1, 1)).
/// The same (spec, seed) pair always produces the same bytes.
BufferMap make_workload_inputs(const TensorOpSpec& spec, std::uint64_t seed);

/// Direct interpretation of the nest: walks the body loops in their current
/// order, then the epilogue. IntrinsicCall statements are evaluated with
/// plain per-element arithmetic (the intrinsic contract, not the register
/// sequence). Mutates accumulators and outputs in `buffers`.
void evaluate_nest(const LoopNest& nest, BufferMap& buffers);

/// max|a - b| over elements, in the buffer's value domain.
double max_abs_diff(DType dtype, const std::vector<std::uint8_t>& a,
                    const std::vector<std::uint8_t>& b);

/// Infinity-norm relative error: max|a - b| / max(max|b|, tiny). Integer
/// buffers compare exactly (returns 0 or a large value).
double relative_error(DType dtype, const std::vector<std::uint8_t>& a,
                      const std::vector<std::uint8_t>& b);

}  // namespace rvvtune
