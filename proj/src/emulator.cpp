// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/emulator.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "rvvtune/error.hpp"
#include "value_io.hpp"

namespace rvvtune {

namespace {

[[noreturn]] void fault(const std::string& msg) { throw EmulatorFault(msg); }

std::uint64_t ceil_log2(std::int64_t v) {
  if (v <= 1) return 0;
  return std::bit_width(static_cast<std::uint64_t>(v - 1));
}

DType int_dtype_for_sew(int sew) {
  switch (sew) {
    case 8: return DType::Int8;
    case 16: return DType::Int16;
    case 32: return DType::Int32;
  }
  fault("unsupported SEW " + std::to_string(sew));
}

DType float_dtype_for_sew(int sew) {
  if (sew == 16) return DType::Float16;
  if (sew == 32) return DType::Float32;
  fault("unsupported float SEW " + std::to_string(sew));
}

}  // namespace

VectorState::VectorState(const MachineConfig& machine)
    : vlen_bits(machine.vlen), regs(32 * machine.vlen / 8, 0) {}

std::uint8_t* VectorState::reg(int idx) {
  return regs.data() + static_cast<std::size_t>(idx) * (vlen_bits / 8);
}

const std::uint8_t* VectorState::reg(int idx) const {
  return regs.data() + static_cast<std::size_t>(idx) * (vlen_bits / 8);
}

std::int64_t vsetvl_sem(std::int64_t avl, int sew, int lmul,
                        const MachineConfig& machine, VectorState& state) {
  if (sew != 8 && sew != 16 && sew != 32)
    fault("vsetvl: illegal SEW " + std::to_string(sew));
  if (lmul != 1 && lmul != 2 && lmul != 4 && lmul != 8)
    fault("vsetvl: illegal LMUL " + std::to_string(lmul));
  if (avl < 0) fault("vsetvl: negative AVL");
  const std::int64_t cap = vlmax(machine.vlen, sew, lmul);
  state.vl = std::min(avl, cap);
  state.sew = sew;
  state.lmul = lmul;
  return state.vl;
}

Emulator::Emulator(const MachineConfig& machine)
    : machine_(machine), state_(machine) {
  machine_.ensure_valid();
}

namespace {

struct RegOperand {
  std::uint8_t* base;
  int sew_bytes;
};

}  // namespace

std::uint64_t Emulator::exec_instruction(
    const Instruction& instr, const Program& program,
    std::vector<std::uint8_t>& memory,
    const std::vector<std::int64_t>& loop_env) {
  // ---- scalar micro-ops ----
  if (instr.op == Opcode::scalar) {
    auto mem_addr = [&]() -> std::int64_t {
      const BufferLayout& buf = program.buffers[instr.mem.buffer];
      std::int64_t idx = instr.mem.index.offset;
      for (const auto& [var, c] : instr.mem.index.terms)
        idx += c * loop_env[var];
      const std::int64_t addr = buf.base + idx * elem_bytes(instr.mem_dtype);
      if (addr < 0 || addr + elem_bytes(instr.mem_dtype) >
                          static_cast<std::int64_t>(memory.size())) {
        std::ostringstream os;
        os << "scalar access to '" << buf.name << "' at byte " << addr
           << " out of bounds";
        fault(os.str());
      }
      return addr;
    };
    switch (instr.skind) {
      case ScalarKind::load_t0:
      case ScalarKind::load_t1: {
        const int t = instr.skind == ScalarKind::load_t0 ? 0 : 1;
        const std::uint8_t* p = memory.data() + mem_addr();
        if (is_float(instr.mem_dtype))
          t_flt_[t] = detail::load_float(instr.mem_dtype, p);
        else
          t_int_[t] = detail::load_int(instr.mem_dtype, p);
        break;
      }
      case ScalarKind::store_t0: {
        std::uint8_t* p = memory.data() + mem_addr();
        if (is_float(instr.mem_dtype))
          detail::store_float(instr.mem_dtype, p, t_flt_[0]);
        else
          detail::store_int(instr.mem_dtype, p, t_int_[0]);
        break;
      }
      case ScalarKind::mul:
        if (is_float(instr.mem_dtype))
          t_flt_[0] = detail::f32_mul(t_flt_[0], t_flt_[1]);
        else
          t_int_[0] = t_int_[0] * t_int_[1];
        break;
      case ScalarKind::add:
        if (is_float(instr.mem_dtype))
          t_flt_[0] = detail::f32_add(t_flt_[0], t_flt_[1]);
        else
          t_int_[0] = t_int_[0] + t_int_[1];
        break;
      case ScalarKind::rq_scale: {
        const std::int64_t prod = t_int_[0] * instr.rq.multiplier;
        const int total_shift = 31 + instr.rq.shift;
        const std::int64_t rounding = std::int64_t{1} << (total_shift - 1);
        t_int_[0] = prod >= 0 ? (prod + rounding) >> total_shift
                              : -((-prod + rounding) >> total_shift);
        break;
      }
      case ScalarKind::rq_clamp:
        t_int_[0] =
            std::clamp<std::int64_t>(t_int_[0] + instr.rq.zero_point, -128, 127);
        break;
    }
    return machine_.scalar_cycle;
  }

  // ---- configuration ----
  if (instr.op == Opcode::vsetvl) {
    vsetvl_sem(instr.vl, instr.sew, instr.lmul, machine_, state_);
    return machine_.cost(Category::Configuration).issue_cycles;
  }

  // ---- vector ops ----
  if (instr.vl != state_.vl || instr.sew != state_.sew ||
      instr.lmul != state_.lmul) {
    std::ostringstream os;
    os << opcode_name(instr.op) << ": vtype context drift (program has vl="
       << instr.vl << " sew=" << instr.sew << " lmul=" << instr.lmul
       << ", state has vl=" << state_.vl << " sew=" << state_.sew
       << " lmul=" << state_.lmul << ")";
    fault(os.str());
  }
  const std::int64_t vl = state_.vl;
  const int sew = state_.sew;
  const int lmul = state_.lmul;
  const int sb = sew / 8;

  auto check_group = [&](int reg, int group, const char* what) {
    if (reg < 0 || reg + group > 32) fault(std::string(what) + ": register group out of range");
    if (group > 1 && reg % group != 0) {
      std::ostringstream os;
      os << opcode_name(instr.op) << ": " << what << " v" << reg
         << " is not aligned to its group size " << group;
      fault(os.str());
    }
  };
  auto elem = [&](int reg, std::int64_t i, int bytes) -> std::uint8_t* {
    return state_.reg(reg) + i * bytes;
  };
  auto widening_overlap = [&](int vd, int dgroup, int vs, int sgroup) {
    const bool overlap = vd < vs + sgroup && vs < vd + dgroup;
    if (overlap) {
      std::ostringstream os;
      os << opcode_name(instr.op) << ": widening destination v" << vd
         << " overlaps narrower source group v" << vs;
      fault(os.str());
    }
  };

  const auto category = categorize_instruction(instr.op);
  const CostEntry& entry = machine_.cost(*category);
  std::int64_t elems = vl;  // elements this instruction processes

  switch (instr.op) {
    case Opcode::vle:
    case Opcode::vse: {
      check_group(instr.vd, lmul, "vd");
      const BufferLayout& buf = program.buffers[instr.mem.buffer];
      std::int64_t idx = instr.mem.index.offset;
      for (const auto& [var, c] : instr.mem.index.terms)
        idx += c * loop_env[var];
      const std::int64_t addr = buf.base + idx * sb;
      const std::int64_t bytes = vl * sb;
      if (addr < 0 || addr + bytes > static_cast<std::int64_t>(memory.size())) {
        std::ostringstream os;
        os << opcode_name(instr.op) << ": access to '" << buf.name
           << "' at byte " << addr << " (+" << bytes << ") out of bounds";
        fault(os.str());
      }
      if (instr.op == Opcode::vle)
        std::memcpy(elem(instr.vd, 0, 1), memory.data() + addr, bytes);
      else
        std::memcpy(memory.data() + addr, elem(instr.vd, 0, 1), bytes);
      break;
    }
    case Opcode::vmv_vx: {
      check_group(instr.vd, lmul, "vd");
      for (std::int64_t i = 0; i < vl; ++i)
        detail::store_int(int_dtype_for_sew(sew), elem(instr.vd, i, sb),
                          instr.imm);
      break;
    }
    case Opcode::vmv_sx: {
      // writes element 0 only (no-op at vl = 0)
      elems = vl > 0 ? 1 : 0;
      if (vl > 0)
        detail::store_int(int_dtype_for_sew(sew), elem(instr.vd, 0, sb),
                          instr.imm);
      break;
    }
    case Opcode::vmv_vv: {
      check_group(instr.vd, lmul, "vd");
      check_group(instr.vs1, lmul, "vs1");
      std::memmove(elem(instr.vd, 0, 1), elem(instr.vs1, 0, 1), vl * sb);
      break;
    }
    case Opcode::vmul:
    case Opcode::vwmul: {
      const bool widen = instr.op == Opcode::vwmul;
      const int dsb = widen ? 2 * sb : sb;
      const int dgroup = widen ? 2 * lmul : lmul;
      check_group(instr.vd, dgroup, "vd");
      check_group(instr.vs1, lmul, "vs1");
      check_group(instr.vs2, lmul, "vs2");
      if (widen) {
        if (dgroup > 8)
          fault("vwmul: destination group exceeds 8 registers");
        widening_overlap(instr.vd, dgroup, instr.vs1, lmul);
        widening_overlap(instr.vd, dgroup, instr.vs2, lmul);
      }
      const DType st = int_dtype_for_sew(sew);
      const DType dt = int_dtype_for_sew(widen ? 2 * sew : sew);
      for (std::int64_t i = vl; i-- > 0;) {  // backwards: vd may alias sources
        const std::int64_t a = detail::load_int(st, elem(instr.vs1, i, sb));
        const std::int64_t b = detail::load_int(st, elem(instr.vs2, i, sb));
        detail::store_int(dt, elem(instr.vd, i, dsb), a * b);
      }
      break;
    }
    case Opcode::vfmul: {
      check_group(instr.vd, lmul, "vd");
      check_group(instr.vs1, lmul, "vs1");
      check_group(instr.vs2, lmul, "vs2");
      const DType ft = float_dtype_for_sew(sew);
      for (std::int64_t i = 0; i < vl; ++i) {
        const double a = detail::load_float(ft, elem(instr.vs1, i, sb));
        const double b = detail::load_float(ft, elem(instr.vs2, i, sb));
        detail::store_float(ft, elem(instr.vd, i, sb), detail::f32_mul(a, b));
      }
      break;
    }
    case Opcode::vredsum:
    case Opcode::vwredsum: {
      const bool widen = instr.op == Opcode::vwredsum;
      const int asb = widen ? 2 * sb : sb;
      check_group(instr.vs2, lmul, "vs2");
      if (widen) widening_overlap(instr.vd, 1, instr.vs2, lmul);
      const DType st = int_dtype_for_sew(sew);
      const DType at = int_dtype_for_sew(widen ? 2 * sew : sew);
      if (vl > 0) {
        std::int64_t acc = detail::load_int(at, elem(instr.vs1, 0, asb));
        for (std::int64_t i = 0; i < vl; ++i)
          acc += detail::load_int(st, elem(instr.vs2, i, sb));
        detail::store_int(at, elem(instr.vd, 0, asb), acc);
      }
      break;
    }
    case Opcode::vfredsum: {
      check_group(instr.vs2, lmul, "vs2");
      const DType ft = float_dtype_for_sew(sew);
      if (vl > 0) {
        double acc = detail::load_float(ft, elem(instr.vs1, 0, sb));
        for (std::int64_t i = 0; i < vl; ++i)
          acc = detail::f32_add(acc, detail::load_float(ft, elem(instr.vs2, i, sb)));
        detail::store_float(ft, elem(instr.vd, 0, sb), acc);
      }
      break;
    }
    case Opcode::vslideup: {
      check_group(instr.vd, lmul, "vd");
      check_group(instr.vs1, lmul, "vs1");
      const std::int64_t offset = instr.imm;
      if (offset < 0) fault("vslideup: negative offset");
      // dest elements below `offset` are preserved
      for (std::int64_t i = vl - 1; i >= offset; --i)
        std::memcpy(elem(instr.vd, i, sb), elem(instr.vs1, i - offset, sb), sb);
      break;
    }
    case Opcode::vadd:
    case Opcode::vfadd: {
      check_group(instr.vd, lmul, "vd");
      check_group(instr.vs1, lmul, "vs1");
      check_group(instr.vs2, lmul, "vs2");
      if (instr.op == Opcode::vadd) {
        const DType st = int_dtype_for_sew(sew);
        for (std::int64_t i = 0; i < vl; ++i) {
          const std::int64_t a = detail::load_int(st, elem(instr.vs1, i, sb));
          const std::int64_t b = detail::load_int(st, elem(instr.vs2, i, sb));
          detail::store_int(st, elem(instr.vd, i, sb), a + b);
        }
      } else {
        const DType ft = float_dtype_for_sew(sew);
        for (std::int64_t i = 0; i < vl; ++i) {
          const double a = detail::load_float(ft, elem(instr.vs1, i, sb));
          const double b = detail::load_float(ft, elem(instr.vs2, i, sb));
          detail::store_float(ft, elem(instr.vd, i, sb), detail::f32_add(a, b));
        }
      }
      break;
    }
    case Opcode::vmacc: {
      check_group(instr.vd, lmul, "vd");
      check_group(instr.vs1, lmul, "vs1");
      check_group(instr.vs2, lmul, "vs2");
      const DType st = int_dtype_for_sew(sew);
      for (std::int64_t i = 0; i < vl; ++i) {
        const std::int64_t a = detail::load_int(st, elem(instr.vs1, i, sb));
        const std::int64_t b = detail::load_int(st, elem(instr.vs2, i, sb));
        const std::int64_t d = detail::load_int(st, elem(instr.vd, i, sb));
        detail::store_int(st, elem(instr.vd, i, sb), d + a * b);
      }
      break;
    }
    case Opcode::vfmacc: {
      check_group(instr.vd, lmul, "vd");
      check_group(instr.vs1, lmul, "vs1");
      check_group(instr.vs2, lmul, "vs2");
      const DType ft = float_dtype_for_sew(sew);
      // multiply rounds, then the accumulate rounds (matches the scalar path)
      for (std::int64_t i = 0; i < vl; ++i) {
        const double a = detail::load_float(ft, elem(instr.vs1, i, sb));
        const double b = detail::load_float(ft, elem(instr.vs2, i, sb));
        const double d = detail::load_float(ft, elem(instr.vd, i, sb));
        detail::store_float(ft, elem(instr.vd, i, sb),
                            detail::f32_add(d, detail::f32_mul(a, b)));
      }
      break;
    }
    default:
      fault("unhandled opcode " + opcode_name(instr.op));
  }

  std::uint64_t cycles = entry.issue_cycles;
  const std::int64_t chunk_bits = static_cast<std::int64_t>(elems) * sew;
  cycles += static_cast<std::uint64_t>((chunk_bits + machine_.dlen - 1) /
                                       machine_.dlen) *
            entry.per_chunk_cycles;
  if (*category == Category::Reduction) cycles += ceil_log2(std::max<std::int64_t>(vl, 1));
  return cycles;
}

namespace {

struct Runner {
  Emulator& emu;
  const Program& program;
  std::vector<std::uint8_t>& memory;
  std::vector<std::int64_t> env;
  ExecTrace trace;

  void run(const std::vector<ProgramItem>& items) {
    for (const auto& item : items) {
      if (std::holds_alternative<Instruction>(item)) {
        const auto& instr = std::get<Instruction>(item);
        trace.total_cycles +=
            emu.exec_instruction(instr, program, memory, env);
        trace.total_instructions += 1;
        trace.counts[instr.op] += 1;
        if (auto cat = categorize_instruction(instr.op); cat.has_value())
          trace.category_counts[static_cast<std::size_t>(*cat)] += 1;
      } else {
        const auto& loop = std::get<ProgramLoop>(item);
        for (std::int64_t i = 0; i < loop.trip; ++i) {
          env[loop.var] = i;
          run(loop.body);
        }
      }
    }
  }
};

}  // namespace

ExecTrace Emulator::run_program(const Program& program,
                                std::vector<std::uint8_t>& memory) {
  if (static_cast<std::int64_t>(memory.size()) != program.memory_bytes())
    fault("memory image size does not match the program layout");
  state_ = VectorState(machine_);
  t_int_[0] = t_int_[1] = 0;
  t_flt_[0] = t_flt_[1] = 0.0;
  Runner runner{*this, program, memory,
                std::vector<std::int64_t>(program.num_loop_vars, 0), {}};
  runner.run(program.items);
  runner.trace.static_instruction_count =
      static_cast<std::uint64_t>(program.static_instruction_count());
  return runner.trace;
}

std::vector<std::uint8_t> make_memory(const Program& program,
                                      const BufferMap& inputs) {
  std::vector<std::uint8_t> memory(program.memory_bytes(), 0);
  for (const auto& [name, bytes] : inputs) {
    const BufferLayout& buf = program.buffer(name);
    if (static_cast<std::int64_t>(bytes.size()) != buf.bytes)
      throw EmulatorFault("input buffer '" + name + "' has wrong size");
    std::copy(bytes.begin(), bytes.end(), memory.begin() + buf.base);
  }
  return memory;
}

std::vector<std::uint8_t> read_buffer(const Program& program,
                                      const std::vector<std::uint8_t>& memory,
                                      const std::string& name) {
  const BufferLayout& buf = program.buffer(name);
  return std::vector<std::uint8_t>(memory.begin() + buf.base,
                                   memory.begin() + buf.base + buf.bytes);
}

}  // namespace rvvtune
