// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "rvvtune/intrinsic.hpp"
#include "rvvtune/loop_nest.hpp"
#include "rvvtune/machine.hpp"
#include "rvvtune/program.hpp"

namespace rvvtune {

enum class SourceKind : std::uint8_t { Scalar, Rvv };

/// A self-contained C translation unit for one nest.
struct EmittedSource {
  std::string text;
  std::string entry_symbol;
  SourceKind kind = SourceKind::Scalar;
  std::int64_t byte_size = 0;
  std::int64_t static_vector_call_count = 0;
};

/// GCC RVV C-intrinsic identifier for one emulator opcode at a given
/// element type and LMUL, following the published intrinsics naming
/// grammar (prefix, opcode, operand form, element type code, LMUL code),
/// e.g. (vle, int8, m4) -> "__riscv_vle8_v_i8m4". `sew` is the source
/// element width; widening ops derive their destination type from it.
/// Throws ConfigError on illegal combinations.
std::string intrinsic_name(Opcode op, DType elem, int lmul);

/// Emits loops mirroring the scheduled nest with each IntrinsicCall
/// expanded to the intrinsic sequence (including __riscv_vsetvl_* calls)
/// and scalar epilogues as plain C. Byte-identical for identical inputs.
EmittedSource emit_rvv_c(const LoopNest& nest, const Registry& registry,
                         const MachineConfig& machine);

/// Plain C loops computing the reference semantics, including
/// requantization; compiles with any C compiler.
EmittedSource emit_scalar_c(const LoopNest& nest);

}  // namespace rvvtune
