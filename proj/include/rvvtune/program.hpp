// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rvvtune/dtype.hpp"
#include "rvvtune/machine.hpp"
#include "rvvtune/tensor_op.hpp"

namespace rvvtune {

enum class Opcode : std::uint8_t {
  vsetvl,
  vle,
  vse,
  vmv_vx,
  vmv_sx,
  vmv_vv,
  vmul,
  vwmul,
  vfmul,
  vredsum,
  vwredsum,
  vfredsum,
  vslideup,
  vadd,
  vfadd,
  vmacc,
  vfmacc,
  scalar,
};

std::string opcode_name(Opcode op);

/// vle -> Load, vse -> Store, v*redsum -> Reduction, arithmetic -> MulAdd,
/// vsetvl -> Configuration, vmv*/vslideup -> Others. Scalar instructions
/// are not categorized (nullopt).
std::optional<Category> categorize_instruction(Opcode op);

/// Scalar micro-ops. Scalar statements lower to short load/compute/store
/// sequences over two implied temporaries (t0, t1), so scalar cost scales
/// with the real instruction count rather than one cycle per statement.
enum class ScalarKind : std::uint8_t {
  load_t0,
  load_t1,
  store_t0,
  mul,        // t0 = t0 * t1 (float ops round to float32 per step)
  add,        // t0 = t0 + t1
  rq_scale,   // t0 = round_half_away((t0 * multiplier) >> (31 + shift))
  rq_clamp,   // t0 = sat_i8(t0 + zero_point)
};

/// Affine expression over program loop variables (assigned small ints).
struct LinExpr {
  std::vector<std::pair<int, std::int64_t>> terms;
  std::int64_t offset = 0;
};

/// Element-indexed reference into one program buffer.
struct MemOperand {
  int buffer = -1;
  LinExpr index;  // in elements of the access dtype
};

struct Instruction {
  Opcode op = Opcode::scalar;
  // vector operands
  int vd = 0, vs1 = 0, vs2 = 0;
  std::int64_t imm = 0;      // vslideup offset, vmv_*x scalar source
  MemOperand mem;            // vle/vse, scalar load/store
  // vtype context captured at emission
  std::int64_t vl = 0;
  int sew = 8;
  int lmul = 1;
  DType mem_dtype = DType::Int8;  // value interpretation for memory/scalar ops
  // scalar payload
  ScalarKind skind = ScalarKind::load_t0;
  RequantParams rq;
};

struct ProgramLoop;
using ProgramItem = std::variant<Instruction, ProgramLoop>;

struct ProgramLoop {
  int var = 0;
  std::int64_t trip = 1;
  std::vector<ProgramItem> body;
};

struct BufferLayout {
  std::string name;
  std::int64_t base = 0;  // byte offset in flat memory
  std::int64_t bytes = 0;
  DType dtype = DType::Int8;
};

/// Straight-line-plus-loops instruction program over a flat memory image.
struct Program {
  std::vector<ProgramItem> items;
  std::vector<BufferLayout> buffers;
  int num_loop_vars = 0;

  std::int64_t memory_bytes() const;
  const BufferLayout& buffer(const std::string& name) const;
  /// Number of Instruction nodes (code-size proxy).
  std::int64_t static_instruction_count() const;
};

/// Executed-instruction accounting for one program run.
struct ExecTrace {
  std::map<Opcode, std::uint64_t> counts;
  std::array<std::uint64_t, kNumCategories> category_counts{};
  std::uint64_t total_cycles = 0;
  std::uint64_t total_instructions = 0;  // scalar + vector
  std::uint64_t static_instruction_count = 0;

  std::uint64_t vector_instructions() const;
  std::uint64_t category(Category c) const {
    return category_counts[static_cast<std::size_t>(c)];
  }
  /// Category share of vector instructions, in percent (0 when no vector
  /// instructions ran).
  double category_percent(Category c) const;

  bool operator==(const ExecTrace&) const = default;
};

}  // namespace rvvtune
