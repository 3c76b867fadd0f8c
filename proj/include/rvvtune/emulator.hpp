// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "rvvtune/eval.hpp"
#include "rvvtune/machine.hpp"
#include "rvvtune/program.hpp"

namespace rvvtune {

/// Architectural vector state: 32 registers of VLEN bits plus the active
/// vtype. One instance per candidate evaluation; instances share nothing.
struct VectorState {
  explicit VectorState(const MachineConfig& machine);

  std::int64_t vlen_bits;
  std::vector<std::uint8_t> regs;  // 32 * vlen/8 bytes, register-major
  std::int64_t vl = 0;
  int sew = 8;
  int lmul = 1;

  std::uint8_t* reg(int idx);
  const std::uint8_t* reg(int idx) const;
};

/// vl = min(avl, vlmax(VLEN, sew, lmul)); updates the vtype state.
/// Throws EmulatorFault on an illegal sew/lmul combination.
std::int64_t vsetvl_sem(std::int64_t avl, int sew, int lmul,
                        const MachineConfig& machine, VectorState& state);

/// Functional emulator for the RVV subset used by the intrinsics.
class Emulator {
 public:
  explicit Emulator(const MachineConfig& machine);

  /// Executes one instruction against the current state and memory and
  /// returns its cycle cost. `loop_env` supplies program loop variable
  /// values for memory operands (index -> value).
  std::uint64_t exec_instruction(const Instruction& instr,
                                 const Program& program,
                                 std::vector<std::uint8_t>& memory,
                                 const std::vector<std::int64_t>& loop_env);

  /// Runs a whole program over a fresh state. `memory` must be
  /// program.memory_bytes() long and pre-filled with the input buffers;
  /// outputs are left in place. Deterministic.
  ExecTrace run_program(const Program& program,
                        std::vector<std::uint8_t>& memory);

  const VectorState& state() const { return state_; }
  VectorState& state() { return state_; }

 private:
  MachineConfig machine_;
  VectorState state_;
  // scalar temporaries for the scalar micro-ops
  std::int64_t t_int_[2] = {0, 0};
  double t_flt_[2] = {0.0, 0.0};
};

/// Builds the flat memory image for a program from per-buffer contents.
/// Buffers missing from `inputs` are zero-filled.
std::vector<std::uint8_t> make_memory(const Program& program,
                                      const BufferMap& inputs);

/// Copies one buffer back out of a flat memory image.
std::vector<std::uint8_t> read_buffer(const Program& program,
                                      const std::vector<std::uint8_t>& memory,
                                      const std::string& name);

}  // namespace rvvtune
