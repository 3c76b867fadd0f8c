// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/program.hpp"

#include <algorithm>

#include "rvvtune/error.hpp"

namespace rvvtune {

std::string opcode_name(Opcode op) {
  switch (op) {
    case Opcode::vsetvl: return "vsetvl";
    case Opcode::vle: return "vle";
    case Opcode::vse: return "vse";
    case Opcode::vmv_vx: return "vmv_vx";
    case Opcode::vmv_sx: return "vmv_sx";
    case Opcode::vmv_vv: return "vmv_vv";
    case Opcode::vmul: return "vmul";
    case Opcode::vwmul: return "vwmul";
    case Opcode::vfmul: return "vfmul";
    case Opcode::vredsum: return "vredsum";
    case Opcode::vwredsum: return "vwredsum";
    case Opcode::vfredsum: return "vfredsum";
    case Opcode::vslideup: return "vslideup";
    case Opcode::vadd: return "vadd";
    case Opcode::vfadd: return "vfadd";
    case Opcode::vmacc: return "vmacc";
    case Opcode::vfmacc: return "vfmacc";
    case Opcode::scalar: return "scalar";
  }
  return "?";
}

std::optional<Category> categorize_instruction(Opcode op) {
  switch (op) {
    case Opcode::vle: return Category::Load;
    case Opcode::vse: return Category::Store;
    case Opcode::vredsum:
    case Opcode::vwredsum:
    case Opcode::vfredsum: return Category::Reduction;
    case Opcode::vmul:
    case Opcode::vwmul:
    case Opcode::vfmul:
    case Opcode::vadd:
    case Opcode::vfadd:
    case Opcode::vmacc:
    case Opcode::vfmacc: return Category::MulAdd;
    case Opcode::vsetvl: return Category::Configuration;
    case Opcode::vmv_vx:
    case Opcode::vmv_sx:
    case Opcode::vmv_vv:
    case Opcode::vslideup: return Category::Others;
    case Opcode::scalar: return std::nullopt;
  }
  return std::nullopt;
}

std::int64_t Program::memory_bytes() const {
  std::int64_t end = 0;
  for (const auto& b : buffers) end = std::max(end, b.base + b.bytes);
  return end;
}

const BufferLayout& Program::buffer(const std::string& name) const {
  for (const auto& b : buffers)
    if (b.name == name) return b;
  throw LoweringError("program has no buffer named '" + name + "'");
}

namespace {

std::int64_t count_instructions(const std::vector<ProgramItem>& items) {
  std::int64_t n = 0;
  for (const auto& item : items) {
    if (std::holds_alternative<Instruction>(item))
      ++n;
    else
      n += count_instructions(std::get<ProgramLoop>(item).body);
  }
  return n;
}

}  // namespace

std::int64_t Program::static_instruction_count() const {
  return count_instructions(items);
}

std::uint64_t ExecTrace::vector_instructions() const {
  std::uint64_t n = 0;
  for (auto c : category_counts) n += c;
  return n;
}

double ExecTrace::category_percent(Category c) const {
  const std::uint64_t total = vector_instructions();
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(category(c)) /
         static_cast<double>(total);
}

}  // namespace rvvtune
