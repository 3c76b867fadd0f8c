// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <random>

#include "doctest.h"
#include "rvvtune/emulator.hpp"
#include "rvvtune/error.hpp"
#include "rvvtune/eval.hpp"
#include "rvvtune/intrinsic.hpp"
#include "rvvtune/lowering.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace rvvtune;
using testutil::from_bytes;
using testutil::to_bytes;

namespace {

Instruction vset(std::int64_t avl, int sew, int lmul) {
  Instruction i;
  i.op = Opcode::vsetvl;
  i.vl = avl;
  i.sew = sew;
  i.lmul = lmul;
  return i;
}

Instruction vop(Opcode op, const VectorState& st) {
  Instruction i;
  i.op = op;
  i.vl = st.vl;
  i.sew = st.sew;
  i.lmul = st.lmul;
  return i;
}

LoopNest tensorized_nest(const TensorOpSpec& spec, const Registry& registry,
                         const VariantKey& key) {
  const LoopNest nest = spec.kind == OpKind::MatMul ? build_matmul_nest(spec)
                                                    : build_macc_nest(spec);
  const IntrinsicVariant* variant = registry.find(key);
  REQUIRE(variant != nullptr);
  // split so the variant's (J, VL) land innermost
  ScheduleTrace trace = ScheduleTrace::identity(nest);
  if (spec.kind == OpKind::MatMul) {
    trace.tile_factors.clear();
    trace.loop_order.clear();
    trace.tile_factors["m"] = {spec.m};
    trace.loop_order.push_back("m");
    if (spec.n == variant->j) {
      trace.tile_factors["n"] = {spec.n};
    } else {
      trace.tile_factors["n"] = {spec.n / variant->j, variant->j};
    }
    if (spec.k == variant->vl) {
      trace.tile_factors["k"] = {spec.k};
    } else {
      trace.tile_factors["k"] = {spec.k / variant->vl, variant->vl};
    }
    if (trace.tile_factors["n"].size() == 2) trace.loop_order.push_back("n0");
    if (trace.tile_factors["k"].size() == 2) trace.loop_order.push_back("k0");
    trace.loop_order.push_back(trace.tile_factors["n"].size() == 2 ? "n1"
                                                                   : "n");
    trace.loop_order.push_back(trace.tile_factors["k"].size() == 2 ? "k1"
                                                                   : "k");
  } else {
    trace.tile_factors.clear();
    trace.loop_order.clear();
    if (spec.n == variant->vl) {
      trace.tile_factors["i"] = {spec.n};
      trace.loop_order = {"i"};
    } else {
      trace.tile_factors["i"] = {spec.n / variant->vl, variant->vl};
      trace.loop_order = {"i0", "i1"};
    }
  }
  return tensorize_block(apply_schedule(nest, trace), *variant);
}

}  // namespace

TEST_CASE("vsetvl semantics: cap at VLMAX, zero is a no-op") {
  const MachineConfig machine = MachineConfig::make(1024);
  VectorState state(machine);
  CHECK(vsetvl_sem(2000, 8, 8, machine, state) == 1024);
  CHECK(state.vl == 1024);
  CHECK(vsetvl_sem(10, 8, 8, machine, state) == 10);
  CHECK(vsetvl_sem(0, 8, 8, machine, state) == 0);
  CHECK_THROWS_AS(vsetvl_sem(4, 12, 8, machine, state), EmulatorFault);
  CHECK_THROWS_AS(vsetvl_sem(4, 8, 3, machine, state), EmulatorFault);

  // vl never exceeds VLMAX after any vsetvl
  std::mt19937_64 rng(1);
  for (int t = 0; t < 500; ++t) {
    const int sew = std::array{8, 16, 32}[rng() % 3];
    const int lmul = std::array{1, 2, 4, 8}[rng() % 4];
    const auto avl = static_cast<std::int64_t>(rng() % 5000);
    CHECK(vsetvl_sem(avl, sew, lmul, machine, state) <=
          vlmax(machine.vlen, sew, lmul));
  }
}

TEST_CASE("vslideup merges a reduced element, preserving the prefix") {
  const MachineConfig machine = MachineConfig::make(256);
  Emulator emu(machine);
  Program prog;  // no buffers needed
  std::vector<std::uint8_t> mem;
  std::vector<std::int64_t> env;

  // out (v2) = [100, 101, 102, 103]; src (v3) elem0 = 55 via vmv_sx
  emu.exec_instruction(vset(4, 32, 1), prog, mem, env);
  for (int i = 0; i < 4; ++i) {
    auto* p = emu.state().reg(2) + i * 4;
    const std::int32_t v = 100 + i;
    std::memcpy(p, &v, 4);
  }
  emu.exec_instruction(vset(1, 32, 1), prog, mem, env);
  Instruction mv = vop(Opcode::vmv_sx, emu.state());
  mv.vd = 3;
  mv.imm = 55;
  emu.exec_instruction(mv, prog, mem, env);

  // slide src into out at offset j=3 with vl=j+1
  emu.exec_instruction(vset(4, 32, 1), prog, mem, env);
  Instruction slide = vop(Opcode::vslideup, emu.state());
  slide.vd = 2;
  slide.vs1 = 3;
  slide.imm = 3;
  emu.exec_instruction(slide, prog, mem, env);

  std::int32_t out[4];
  std::memcpy(out, emu.state().reg(2), 16);
  CHECK(out[0] == 100);
  CHECK(out[1] == 101);
  CHECK(out[2] == 102);
  CHECK(out[3] == 55);
}

TEST_CASE("vredsum adds the accumulator element to the element sum") {
  const MachineConfig machine = MachineConfig::make(256);
  Emulator emu(machine);
  Program prog;
  std::vector<std::uint8_t> mem;
  std::vector<std::int64_t> env;

  emu.exec_instruction(vset(4, 32, 1), prog, mem, env);
  for (int i = 0; i < 4; ++i) {
    const std::int32_t v = i + 1;  // [1,2,3,4]
    std::memcpy(emu.state().reg(4) + i * 4, &v, 4);
  }
  const std::int32_t acc0 = 0;
  std::memcpy(emu.state().reg(5), &acc0, 4);
  Instruction red = vop(Opcode::vredsum, emu.state());
  red.vd = 6;
  red.vs2 = 4;
  red.vs1 = 5;
  emu.exec_instruction(red, prog, mem, env);
  std::int32_t out;
  std::memcpy(&out, emu.state().reg(6), 4);
  CHECK(out == 10);
}

TEST_CASE("vle then vse round-trips memory") {
  const MachineConfig machine = MachineConfig::make(256);
  Emulator emu(machine);
  Program prog;
  prog.buffers.push_back({"buf", 0, 64, DType::Int8});
  std::vector<std::uint8_t> mem(64);
  for (std::size_t i = 0; i < mem.size(); ++i)
    mem[i] = static_cast<std::uint8_t>(i * 7 + 3);
  const auto before = mem;
  std::vector<std::int64_t> env;

  emu.exec_instruction(vset(64, 8, 2), prog, mem, env);
  Instruction load = vop(Opcode::vle, emu.state());
  load.vd = 2;
  load.mem = {0, {}};
  emu.exec_instruction(load, prog, mem, env);
  Instruction store = vop(Opcode::vse, emu.state());
  store.vd = 2;
  store.mem = {0, {}};
  emu.exec_instruction(store, prog, mem, env);
  CHECK(mem == before);

  // out-of-bounds access faults with the address in the message
  Instruction bad = vop(Opcode::vle, emu.state());
  bad.vd = 2;
  bad.mem = {0, {{}, 40}};
  CHECK_THROWS_AS(emu.exec_instruction(bad, prog, mem, env), EmulatorFault);
}

TEST_CASE("illegal widening overlap and misaligned groups fault") {
  const MachineConfig machine = MachineConfig::make(256);
  Emulator emu(machine);
  Program prog;
  std::vector<std::uint8_t> mem;
  std::vector<std::int64_t> env;

  emu.exec_instruction(vset(8, 8, 4), prog, mem, env);
  Instruction wmul = vop(Opcode::vwmul, emu.state());
  wmul.vd = 8;   // overlaps vs1 group [8, 12)
  wmul.vs1 = 8;
  wmul.vs2 = 12;
  CHECK_THROWS_AS(emu.exec_instruction(wmul, prog, mem, env), EmulatorFault);

  Instruction misaligned = vop(Opcode::vwmul, emu.state());
  misaligned.vd = 20;  // 20 % 8 != 0 for the widened group
  misaligned.vs1 = 8;
  misaligned.vs2 = 12;
  CHECK_THROWS_AS(emu.exec_instruction(misaligned, prog, mem, env),
                  EmulatorFault);
}

TEST_CASE("cost model: positivity, monotonicity, reduction log term") {
  const MachineConfig machine = MachineConfig::make(1024);  // DLEN 512
  Emulator emu(machine);
  Program prog;
  prog.buffers.push_back({"buf", 0, 4096, DType::Int8});
  std::vector<std::uint8_t> mem(4096);
  std::vector<std::int64_t> env;

  std::uint64_t prev = 0;
  for (std::int64_t vl : {1, 2, 4, 16, 64, 256, 1024}) {
    emu.exec_instruction(vset(vl, 8, 8), prog, mem, env);
    Instruction load = vop(Opcode::vle, emu.state());
    load.vd = 8;
    load.mem = {0, {}};
    const std::uint64_t c = emu.exec_instruction(load, prog, mem, env);
    CHECK(c > 0);
    CHECK(c >= prev);
    prev = c;
    // linear chunked model: issue + ceil(vl*sew/dlen) * per_chunk
    CHECK(c == 2 + static_cast<std::uint64_t>((vl * 8 + 511) / 512));
  }

  // reductions add ceil(log2(vl))
  emu.exec_instruction(vset(64, 32, 8), prog, mem, env);
  Instruction red = vop(Opcode::vredsum, emu.state());
  red.vd = 1;
  red.vs1 = 1;
  red.vs2 = 8;
  const std::uint64_t rc = emu.exec_instruction(red, prog, mem, env);
  CHECK(rc == 2 + (64 * 32 + 511) / 512 + 6);
}

TEST_CASE("lowered macc program matches the Alg. 2 shape exactly") {
  const MachineConfig machine = MachineConfig::make(256);
  const Registry registry = Registry::build(machine, {DType::Float32});
  const auto spec = TensorOpSpec::macc(64, DType::Float32);
  const LoopNest tz = tensorized_nest(
      spec, registry, VariantKey{IntrinsicKind::VMacc, DType::Float32, 64, 1});
  const Program program = lower_nest(tz, registry, machine);

  BufferMap inputs;
  inputs["A"] = to_bytes(std::vector<float>(64, 1.0f));
  inputs["B"] = to_bytes(std::vector<float>(64, 1.0f));
  inputs["C"] = to_bytes(std::vector<float>(64, 1.0f));
  auto memory = make_memory(program, inputs);
  Emulator emu(machine);
  const ExecTrace trace = emu.run_program(program, memory);

  CHECK(trace.counts.at(Opcode::vle) == 3);
  CHECK(trace.counts.at(Opcode::vfmacc) == 1);
  CHECK(trace.counts.at(Opcode::vse) == 1);
  CHECK(trace.counts.at(Opcode::vsetvl) == 1);
  CHECK(trace.category(Category::Load) == 3);
  CHECK(trace.category(Category::MulAdd) == 1);
  CHECK(trace.category(Category::Store) == 1);
  CHECK(trace.category(Category::Configuration) == 1);

  for (float v : from_bytes<float>(read_buffer(program, memory, "C")))
    CHECK(v == 2.0f);

  // determinism: a second run produces a bitwise identical trace
  auto memory2 = make_memory(program, inputs);
  Emulator emu2(machine);
  CHECK(emu2.run_program(program, memory2) == trace);
  CHECK(memory2 == memory);
}

TEST_CASE("multivmul lowering stores once per intrinsic call") {
  const MachineConfig machine = MachineConfig::make(1024);
  const Registry registry = Registry::build(machine, {DType::Int8});
  const auto spec = TensorOpSpec::quantized_matmul(32, 32, 32);
  const LoopNest tz = tensorized_nest(
      spec, registry, VariantKey{IntrinsicKind::MultiVMul, DType::Int8, 32, 32});
  const Program program = lower_nest(tz, registry, machine);

  BufferMap inputs = make_workload_inputs(spec, 3);
  auto memory = make_memory(program, inputs);
  Emulator emu(machine);
  const ExecTrace trace = emu.run_program(program, memory);

  // m * (n/J) * (k/VL) = 32 calls, each with exactly one store
  CHECK(trace.counts.at(Opcode::vse) == 32);
  CHECK(trace.counts.at(Opcode::vslideup) == 32u * 31u);
  CHECK(trace.counts.at(Opcode::vwmul) == 32u * 32u);
  CHECK(trace.counts.at(Opcode::vwredsum) == 32u * 32u);

  // store share of executed vector instructions stays under 1%
  CHECK(trace.category_percent(Category::Store) < 1.0);
}

TEST_CASE("scalar 1x1x1 lowering uses no vector instructions") {
  const MachineConfig machine = MachineConfig::make(256);
  const Registry registry = Registry::build(machine, {DType::Float32});
  const auto spec = TensorOpSpec::float_matmul(1, 1, 1);
  const LoopNest nest = build_matmul_nest(spec);
  const Program program = lower_nest(nest, registry, machine);

  BufferMap inputs;
  inputs["A"] = to_bytes<float>({2.0f});
  inputs["B"] = to_bytes<float>({3.0f});
  inputs["D"] = to_bytes<float>({1.0f});
  auto memory = make_memory(program, inputs);
  Emulator emu(machine);
  const ExecTrace trace = emu.run_program(program, memory);
  CHECK(trace.vector_instructions() == 0);
  CHECK(trace.total_instructions > 0);
  CHECK(trace.total_cycles ==
        trace.total_instructions * machine.scalar_cycle);
  CHECK(from_bytes<float>(read_buffer(program, memory, "C"))[0] == 7.0f);
}

TEST_CASE("empty program runs to an empty trace") {
  const MachineConfig machine = MachineConfig::make(256);
  Program program;
  std::vector<std::uint8_t> memory;
  Emulator emu(machine);
  const ExecTrace trace = emu.run_program(program, memory);
  CHECK(trace.total_instructions == 0);
  CHECK(trace.total_cycles == 0);
  CHECK(trace.vector_instructions() == 0);
}

TEST_CASE("Alg. 1 merge reconstructs all J dot products in the emulator") {
  const MachineConfig machine = MachineConfig::make(256);  // J = 8
  const Registry registry = Registry::build(machine, {DType::Int8});
  const auto spec = TensorOpSpec::quantized_matmul(1, 8, 16);
  const LoopNest tz = tensorized_nest(
      spec, registry, VariantKey{IntrinsicKind::MultiVMul, DType::Int8, 16, 8});
  const Program program = lower_nest(tz, registry, machine);

  std::mt19937_64 rng(41);
  const auto a = testutil::random_i8(16, rng);
  const auto b = testutil::random_i8(8 * 16, rng);
  const auto d = testutil::random_i32(8, rng);
  BufferMap inputs;
  inputs["A"] = to_bytes(a);
  inputs["B"] = to_bytes(b);
  inputs["D"] = to_bytes(d);
  auto memory = make_memory(program, inputs);
  Emulator emu(machine);
  emu.run_program(program, memory);

  auto widen = [](const auto& v) {
    return std::vector<std::int64_t>(v.begin(), v.end());
  };
  const auto want = oracles::matmul_i64(1, 8, 16, widen(a), widen(b), widen(d));
  const auto acc = from_bytes<std::int32_t>(read_buffer(program, memory, "D"));
  for (std::size_t j = 0; j < 8; ++j)
    CHECK(static_cast<std::int64_t>(acc[j]) == want[j]);
}

TEST_CASE("emulated tensorized programs equal the scalar evaluation") {
  // int8: bit exact including requantization
  {
    const MachineConfig machine = MachineConfig::make(512);
    const Registry registry = Registry::build(machine, {DType::Int8});
    const auto spec = TensorOpSpec::quantized_matmul(16, 16, 16);
    const LoopNest tz = tensorized_nest(
        spec, registry,
        VariantKey{IntrinsicKind::MultiVMul, DType::Int8, 16, 16});
    const Program program = lower_nest(tz, registry, machine);

    BufferMap inputs = make_workload_inputs(spec, 8);
    const LoopNest canonical = build_matmul_nest(spec);
    BufferMap ref = make_buffer_map(canonical);
    for (const auto& [name, bytes] : inputs) ref[name] = bytes;
    evaluate_nest(canonical, ref);

    auto memory = make_memory(program, inputs);
    Emulator emu(machine);
    emu.run_program(program, memory);
    CHECK(read_buffer(program, memory, "C") == ref["C"]);
  }
  // float32: within reassociation tolerance
  {
    const MachineConfig machine = MachineConfig::make(512);
    const Registry registry = Registry::build(machine, {DType::Float32});
    const auto spec = TensorOpSpec::float_matmul(8, 16, 32);
    const LoopNest tz = tensorized_nest(
        spec, registry,
        VariantKey{IntrinsicKind::MultiVMul, DType::Float32, 32, 16});
    const Program program = lower_nest(tz, registry, machine);

    BufferMap inputs = make_workload_inputs(spec, 9);
    const LoopNest canonical = build_matmul_nest(spec);
    BufferMap ref = make_buffer_map(canonical);
    for (const auto& [name, bytes] : inputs) ref[name] = bytes;
    evaluate_nest(canonical, ref);

    auto memory = make_memory(program, inputs);
    Emulator emu(machine);
    emu.run_program(program, memory);
    CHECK(relative_error(DType::Float32, read_buffer(program, memory, "C"),
                         ref["C"]) <= 1e-4);
  }
}

TEST_CASE("every vector opcode maps to exactly one category") {
  for (int op = 0; op <= static_cast<int>(Opcode::scalar); ++op) {
    const auto cat = categorize_instruction(static_cast<Opcode>(op));
    if (static_cast<Opcode>(op) == Opcode::scalar) {
      CHECK_FALSE(cat.has_value());
    } else {
      CHECK(cat.has_value());
    }
  }
  CHECK(categorize_instruction(Opcode::vwmul) == Category::MulAdd);
  CHECK(categorize_instruction(Opcode::vsetvl) == Category::Configuration);
  CHECK(categorize_instruction(Opcode::vslideup) == Category::Others);
}

TEST_CASE("scalar float32 programs match the interpreter bit for bit") {
  // the scalar micro-op expansion performs the same float32-rounded steps
  // in the same order as the interpreter
  const MachineConfig machine = MachineConfig::make(256);
  const Registry registry = Registry::build(machine, {DType::Float32});
  const auto spec = TensorOpSpec::float_matmul(5, 6, 7);
  const LoopNest nest = build_matmul_nest(spec);
  const Program program = lower_nest(nest, registry, machine);

  const BufferMap inputs = make_workload_inputs(spec, 31);
  BufferMap ref = make_buffer_map(nest);
  for (const auto& [name, bytes] : inputs) ref[name] = bytes;
  evaluate_nest(nest, ref);

  auto memory = make_memory(program, inputs);
  Emulator emu(machine);
  emu.run_program(program, memory);
  CHECK(read_buffer(program, memory, "C") == ref["C"]);
  CHECK(read_buffer(program, memory, "D") == ref["D"]);
}

TEST_CASE("float16 tensorized programs stay within the f16 tolerance") {
  const MachineConfig machine = MachineConfig::make(512);
  const Registry registry = Registry::build(machine, {DType::Float16});
  const auto spec = TensorOpSpec::float_matmul(4, 16, 32, DType::Float16);
  const LoopNest tz = tensorized_nest(
      spec, registry,
      VariantKey{IntrinsicKind::MultiVMul, DType::Float16, 32, 16});
  const Program program = lower_nest(tz, registry, machine);

  const BufferMap inputs = make_workload_inputs(spec, 12);
  const LoopNest canonical = build_matmul_nest(spec);
  BufferMap ref = make_buffer_map(canonical);
  for (const auto& [name, bytes] : inputs) ref[name] = bytes;
  evaluate_nest(canonical, ref);

  auto memory = make_memory(program, inputs);
  Emulator emu(machine);
  emu.run_program(program, memory);
  CHECK(relative_error(DType::Float16, read_buffer(program, memory, "C"),
                       ref["C"]) <= 1e-2);
}

TEST_CASE("int8 vmacc wraps identically in the emulator and interpreter") {
  const MachineConfig machine = MachineConfig::make(256);
  const Registry registry = Registry::build(machine, {DType::Int8});
  const auto spec = TensorOpSpec::macc(256, DType::Int8);
  const LoopNest tz = tensorized_nest(
      spec, registry, VariantKey{IntrinsicKind::VMacc, DType::Int8, 256, 1});
  const Program program = lower_nest(tz, registry, machine);

  // saturating-range inputs force plenty of 8-bit wraparound
  const BufferMap inputs = make_workload_inputs(spec, 77);
  const LoopNest canonical = build_macc_nest(spec);
  BufferMap ref = make_buffer_map(canonical);
  for (const auto& [name, bytes] : inputs) ref[name] = bytes;
  evaluate_nest(canonical, ref);

  auto memory = make_memory(program, inputs);
  Emulator emu(machine);
  emu.run_program(program, memory);
  CHECK(read_buffer(program, memory, "C") == ref["C"]);
}

TEST_CASE("vl=0 turns vector ops into no-ops") {
  const MachineConfig machine = MachineConfig::make(256);
  Emulator emu(machine);
  Program prog;
  prog.buffers.push_back({"buf", 0, 64, DType::Int8});
  std::vector<std::uint8_t> mem(64, 0xAB);
  const auto before_mem = mem;
  std::vector<std::int64_t> env;

  emu.exec_instruction(vset(0, 8, 1), prog, mem, env);
  CHECK(emu.state().vl == 0);
  const auto before_regs = emu.state().regs;

  Instruction load = vop(Opcode::vle, emu.state());
  load.vd = 1;
  load.mem = {0, {}};
  const std::uint64_t c = emu.exec_instruction(load, prog, mem, env);
  CHECK(c == 2);  // issue only, zero chunks
  CHECK(emu.state().regs == before_regs);

  Instruction store = vop(Opcode::vse, emu.state());
  store.vd = 1;
  store.mem = {0, {}};
  emu.exec_instruction(store, prog, mem, env);
  CHECK(mem == before_mem);
}

TEST_CASE("each macc intrinsic call re-establishes its own vtype") {
  const MachineConfig machine = MachineConfig::make(256);
  const Registry registry = Registry::build(machine, {DType::Float32});
  const auto spec = TensorOpSpec::macc(256, DType::Float32);
  const LoopNest tz = tensorized_nest(
      spec, registry, VariantKey{IntrinsicKind::VMacc, DType::Float32, 64, 1});
  const Program program = lower_nest(tz, registry, machine);

  BufferMap inputs = make_workload_inputs(spec, 1);
  auto memory = make_memory(program, inputs);
  Emulator emu(machine);
  const ExecTrace trace = emu.run_program(program, memory);
  // 4 calls x {1 vsetvl, 3 vle, 1 vmacc, 1 vse}
  CHECK(trace.counts.at(Opcode::vsetvl) == 4);
  CHECK(trace.counts.at(Opcode::vle) == 12);
  CHECK(trace.counts.at(Opcode::vfmacc) == 4);
  CHECK(trace.counts.at(Opcode::vse) == 4);
}
