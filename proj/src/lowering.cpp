// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/lowering.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "rvvtune/error.hpp"

namespace rvvtune {

namespace {

// Fixed register assignment for the intrinsic templates. Widening paths
// load sources at LMUL=4 so the doubled-width products stay a legal
// LMUL=8 group; everything else runs LMUL=8.
struct RegPlan {
  int a_vec, b_vec, prod_vec;
  int red = 1, out = 2, tmp = 3, c_vec = 4;
};

RegPlan reg_plan(int src_lmul) {
  if (src_lmul == 4) return {8, 12, 16};
  return {8, 16, 24};
}

struct Emitter {
  const LoopNest& nest;
  const MachineConfig& machine;
  Program program;
  std::map<LoopId, int> loop_vars;
  std::map<std::string, int> buffer_ids;
  // vtype context tracking; nullopt = unknown (loop boundaries)
  std::optional<std::tuple<int, int, std::int64_t>> ctx;

  explicit Emitter(const LoopNest& n, const MachineConfig& m)
      : nest(n), machine(m) {
    std::int64_t base = 0;
    for (const auto& buf : n.buffers) {
      buffer_ids[buf.name] = static_cast<int>(program.buffers.size());
      program.buffers.push_back(
          {buf.name, base, buf.byte_size(), buf.dtype});
      base += (buf.byte_size() + 63) / 64 * 64;
    }
  }

  std::vector<std::int64_t> strides(const Buffer& buf) const {
    std::vector<std::int64_t> s(buf.shape.size());
    std::int64_t acc = 1;
    for (std::size_t i = buf.shape.size(); i-- > 0;) {
      s[i] = acc;
      acc *= buf.shape[i];
    }
    return s;
  }

  LinExpr translate(const AffineIndex& idx) const {
    LinExpr e;
    e.offset = idx.offset;
    for (const auto& [id, c] : idx.terms) {
      auto it = loop_vars.find(id);
      if (it == loop_vars.end())
        throw LoweringError("access references unknown loop '" + id + "'");
      e.terms.emplace_back(it->second, c);
    }
    return e;
  }

  MemOperand flat_operand(const BufferAccess& access,
                          std::int64_t extra_elems = 0) const {
    const Buffer& buf = nest.buffer(access.buffer);
    auto st = strides(buf);
    LinExpr flat;
    flat.offset = extra_elems;
    for (std::size_t d = 0; d < access.indices.size(); ++d) {
      LinExpr e = translate(access.indices[d]);
      flat.offset += e.offset * st[d];
      for (auto& [var, c] : e.terms) flat.terms.emplace_back(var, c * st[d]);
    }
    return {buffer_ids.at(access.buffer), flat};
  }

  void emit(std::vector<ProgramItem>& out, Instruction instr) {
    out.push_back(std::move(instr));
  }

  void ensure_ctx(std::vector<ProgramItem>& out, int sew, int lmul,
                  std::int64_t vl) {
    if (ctx.has_value() && *ctx == std::make_tuple(sew, lmul, vl)) return;
    Instruction i;
    i.op = Opcode::vsetvl;
    i.sew = sew;
    i.lmul = lmul;
    i.vl = vl;
    emit(out, i);
    ctx = std::make_tuple(sew, lmul, vl);
  }

  Instruction vinstr(Opcode op) const {
    Instruction i;
    i.op = op;
    if (!ctx.has_value())
      throw LoweringError("vector instruction emitted with unknown vtype");
    std::tie(i.sew, i.lmul, i.vl) = *ctx;
    return i;
  }

  // ---- scalar statement expansion ----
  // One multiply-accumulate becomes the six-instruction load/load/mul/
  // load/add/store sequence a scalar ISA would execute; requantization
  // becomes load/scale/clamp/store.

  Instruction sinstr(ScalarKind kind, DType dt, MemOperand mem = {}) const {
    Instruction i;
    i.op = Opcode::scalar;
    i.skind = kind;
    i.mem_dtype = dt;
    i.mem = std::move(mem);
    return i;
  }

  void emit_mac(std::vector<ProgramItem>& out, const MacStmt& s) {
    const DType in = nest.buffer(s.a.buffer).dtype;
    const DType acc = nest.buffer(s.dst.buffer).dtype;
    emit(out, sinstr(ScalarKind::load_t0, in, flat_operand(s.a)));
    emit(out, sinstr(ScalarKind::load_t1, in, flat_operand(s.b)));
    emit(out, sinstr(ScalarKind::mul, acc));
    emit(out, sinstr(ScalarKind::load_t1, acc, flat_operand(s.dst)));
    emit(out, sinstr(ScalarKind::add, acc));
    emit(out, sinstr(ScalarKind::store_t0, acc, flat_operand(s.dst)));
  }

  void emit_requant(std::vector<ProgramItem>& out, const RequantStmt& s) {
    emit(out, sinstr(ScalarKind::load_t0, DType::Int32, flat_operand(s.src)));
    Instruction scale = sinstr(ScalarKind::rq_scale, DType::Int32);
    scale.rq = s.params;
    emit(out, scale);
    Instruction clamp = sinstr(ScalarKind::rq_clamp, DType::Int32);
    clamp.rq = s.params;
    emit(out, clamp);
    emit(out, sinstr(ScalarKind::store_t0, DType::Int8, flat_operand(s.dst)));
  }

  void emit_copy(std::vector<ProgramItem>& out, const CopyStmt& s) {
    const DType dt = nest.buffer(s.src.buffer).dtype;
    emit(out, sinstr(ScalarKind::load_t0, dt, flat_operand(s.src)));
    emit(out, sinstr(ScalarKind::store_t0, dt, flat_operand(s.dst)));
  }

  // ---- intrinsic templates ----

  void emit_multivmul(std::vector<ProgramItem>& out,
                      const IntrinsicCallStmt& call,
                      const IntrinsicVariant& v) {
    const RegPlan regs = reg_plan(v.src_lmul);
    const int in_sew = sew_bits(v.in_dtype);
    const int acc_sew = sew_bits(v.acc_dtype);
    const bool flt = is_float(v.in_dtype);
    const std::int64_t b_row = nest.buffer(call.b.buffer).shape.back();

    // load the A vector and the current accumulator values
    ensure_ctx(out, in_sew, v.src_lmul, v.vl);
    {
      Instruction vle = vinstr(Opcode::vle);
      vle.vd = regs.a_vec;
      vle.mem = flat_operand(call.a);
      emit(out, vle);
    }
    ensure_ctx(out, acc_sew, 1, call.j);
    {
      Instruction vle = vinstr(Opcode::vle);
      vle.vd = regs.c_vec;
      vle.mem = flat_operand(call.c);
      emit(out, vle);
    }

    for (std::int64_t j = 0; j < call.j; ++j) {
      // zero the reduction seed
      ensure_ctx(out, acc_sew, 1, 1);
      {
        Instruction mv = vinstr(Opcode::vmv_sx);
        mv.vd = regs.red;
        mv.imm = 0;
        emit(out, mv);
      }
      // one row of B
      ensure_ctx(out, in_sew, v.src_lmul, v.vl);
      {
        Instruction vle = vinstr(Opcode::vle);
        vle.vd = regs.b_vec;
        vle.mem = flat_operand(call.b, j * b_row);
        emit(out, vle);
      }
      // elementwise multiply (widening on narrow integers)
      {
        Instruction mul =
            vinstr(flt ? Opcode::vfmul
                       : (v.widen_factor == 2 ? Opcode::vwmul : Opcode::vmul));
        mul.vd = regs.prod_vec;
        mul.vs1 = regs.a_vec;
        mul.vs2 = regs.b_vec;
        emit(out, mul);
      }
      // reduce the products into element 0 of the seed register
      if (flt) {
        Instruction red = vinstr(Opcode::vfredsum);
        red.vd = regs.red;
        red.vs2 = regs.prod_vec;
        red.vs1 = regs.red;
        emit(out, red);
      } else if (v.in_dtype == DType::Int8) {
        // products are int16 at LMUL 8; widening sum into an int32 element
        ensure_ctx(out, 2 * in_sew, std::min(8, v.src_lmul * 2), v.vl);
        Instruction red = vinstr(Opcode::vwredsum);
        red.vd = regs.red;
        red.vs2 = regs.prod_vec;
        red.vs1 = regs.red;
        emit(out, red);
      } else {
        ensure_ctx(out, acc_sew, 8, v.vl);
        Instruction red = vinstr(Opcode::vredsum);
        red.vd = regs.red;
        red.vs2 = regs.prod_vec;
        red.vs1 = regs.red;
        emit(out, red);
      }
      // merge the reduced value into the output register; the slide stage
      // disappears at J = 1
      ensure_ctx(out, acc_sew, 1, 1);
      if (j == 0) {
        Instruction mv = vinstr(Opcode::vmv_vv);
        mv.vd = regs.out;
        mv.vs1 = regs.red;
        emit(out, mv);
      } else {
        Instruction mv = vinstr(Opcode::vmv_vv);
        mv.vd = regs.tmp;
        mv.vs1 = regs.red;
        emit(out, mv);
        ensure_ctx(out, acc_sew, 1, j + 1);
        Instruction slide = vinstr(Opcode::vslideup);
        slide.vd = regs.out;
        slide.vs1 = regs.tmp;
        slide.imm = j;
        emit(out, slide);
      }
    }

    // accumulate with the previous values and store the row tile back
    ensure_ctx(out, acc_sew, 1, call.j);
    {
      Instruction add = vinstr(flt ? Opcode::vfadd : Opcode::vadd);
      add.vd = regs.out;
      add.vs1 = regs.out;
      add.vs2 = regs.c_vec;
      emit(out, add);
    }
    {
      Instruction vse = vinstr(Opcode::vse);
      vse.vd = regs.out;
      vse.mem = flat_operand(call.c);
      emit(out, vse);
    }
  }

  void emit_vmacc(std::vector<ProgramItem>& out,
                  const IntrinsicCallStmt& call, const IntrinsicVariant& v) {
    const RegPlan regs = reg_plan(v.src_lmul);
    const int sew = sew_bits(v.in_dtype);
    ensure_ctx(out, sew, v.src_lmul, v.vl);
    for (auto [vd, access] : {std::pair{regs.a_vec, &call.a},
                              std::pair{regs.b_vec, &call.b},
                              std::pair{regs.prod_vec, &call.c}}) {
      Instruction vle = vinstr(Opcode::vle);
      vle.vd = vd;
      vle.mem = flat_operand(*access);
      emit(out, vle);
    }
    {
      Instruction macc =
          vinstr(is_float(v.in_dtype) ? Opcode::vfmacc : Opcode::vmacc);
      macc.vd = regs.prod_vec;
      macc.vs1 = regs.a_vec;
      macc.vs2 = regs.b_vec;
      emit(out, macc);
    }
    {
      Instruction vse = vinstr(Opcode::vse);
      vse.vd = regs.prod_vec;
      vse.mem = flat_operand(call.c);
      emit(out, vse);
    }
  }

  // ---- block walking ----

  void emit_stmt(std::vector<ProgramItem>& out, const Stmt& stmt,
                 const Registry* registry) {
    if (std::holds_alternative<MacStmt>(stmt)) {
      emit_mac(out, std::get<MacStmt>(stmt));
    } else if (std::holds_alternative<RequantStmt>(stmt)) {
      emit_requant(out, std::get<RequantStmt>(stmt));
    } else if (std::holds_alternative<CopyStmt>(stmt)) {
      emit_copy(out, std::get<CopyStmt>(stmt));
    } else {
      const auto& call = std::get<IntrinsicCallStmt>(stmt);
      if (registry == nullptr)
        throw LoweringError("intrinsic call without a registry");
      VariantKey key{call.kind, call.in_dtype, call.vl,
                     call.kind == IntrinsicKind::MultiVMul ? call.j : 1};
      const IntrinsicVariant* v = registry->find(key);
      if (v == nullptr)
        throw LoweringError("intrinsic call references unregistered variant " +
                            key.str());
      if (call.kind == IntrinsicKind::MultiVMul)
        emit_multivmul(out, call, *v);
      else
        emit_vmacc(out, call, *v);
    }
  }

  void emit_block(std::vector<ProgramItem>& out, const StmtBlock& block,
                  const Registry* registry) {
    for (const auto& loop : block.loops) {
      int var = program.num_loop_vars++;
      loop_vars[loop.id] = var;
    }
    emit_band(out, block, 0, registry);
    for (const auto& loop : block.loops) loop_vars.erase(loop.id);
  }

  void emit_band(std::vector<ProgramItem>& out, const StmtBlock& block,
                 std::size_t depth, const Registry* registry) {
    if (depth == block.loops.size()) {
      for (const auto& stmt : block.stmts) emit_stmt(out, stmt, registry);
      return;
    }
    ProgramLoop loop;
    loop.var = loop_vars.at(block.loops[depth].id);
    loop.trip = block.loops[depth].extent;
    // each iteration re-establishes its own vtype
    ctx.reset();
    emit_band(loop.body, block, depth + 1, registry);
    ctx.reset();
    out.push_back(std::move(loop));
  }
};

}  // namespace

Program lower_nest(const LoopNest& nest, const Registry& registry,
                   const MachineConfig& machine) {
  auto violations = validate_nest(nest);
  if (!violations.empty()) {
    std::string msg = "cannot lower invalid nest:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw LoweringError(msg);
  }
  Emitter em(nest, machine);
  em.emit_block(em.program.items, nest.body, &registry);
  if (nest.epilogue.has_value())
    em.emit_block(em.program.items, *nest.epilogue, nullptr);
  return std::move(em.program);
}

Program lower_rowstore(const LoopNest& nest, const Registry& registry,
                       const MachineConfig& machine) {
  if (nest.spec.kind != OpKind::MatMul)
    throw LoweringError("the row-store baseline is defined for matmul only");
  const TensorOpSpec& spec = nest.spec;

  // widest registered VL that divides the reduction extent
  const DtypePath path = dtype_path(spec.in_dtype);
  std::int64_t vl = 0;
  for (const auto& v : registry.variants()) {
    if (v.kind == IntrinsicKind::MultiVMul && v.in_dtype == spec.in_dtype &&
        spec.k % v.vl == 0) {
      vl = std::max(vl, v.vl);
    }
  }
  if (vl == 0)
    throw LoweringError(
        "row-store baseline: no registered VL divides the reduction extent " +
        std::to_string(spec.k));

  Emitter em(nest, machine);
  const RegPlan regs = reg_plan(path.src_lmul);
  const int in_sew = sew_bits(spec.in_dtype);
  const int acc_sew = sew_bits(spec.acc_dtype);
  const bool flt = is_float(spec.in_dtype);

  const int var_i = em.program.num_loop_vars++;
  const int var_j = em.program.num_loop_vars++;
  const int var_c = em.program.num_loop_vars++;

  ProgramLoop li{var_i, spec.m, {}};
  ProgramLoop lj{var_j, spec.n, {}};
  ProgramLoop lc{var_c, spec.k / vl, {}};

  const int a_id = em.buffer_ids.at("A");
  const int b_id = em.buffer_ids.at("B");
  const int d_id = em.buffer_ids.at("D");

  // zero the reduction seed once per output element
  em.ctx.reset();
  em.ensure_ctx(lj.body, acc_sew, 1, 1);
  {
    Instruction mv = em.vinstr(Opcode::vmv_sx);
    mv.vd = regs.red;
    mv.imm = 0;
    lj.body.push_back(mv);
  }

  // vectorized dot product in VL-sized chunks, accumulated via the
  // reduction's seed element
  em.ctx.reset();
  em.ensure_ctx(lc.body, in_sew, path.src_lmul, vl);
  {
    Instruction vle = em.vinstr(Opcode::vle);
    vle.vd = regs.a_vec;
    vle.mem = {a_id, {{{var_i, spec.k}, {var_c, vl}}, 0}};
    lc.body.push_back(vle);
    Instruction vlb = em.vinstr(Opcode::vle);
    vlb.vd = regs.b_vec;
    vlb.mem = {b_id, {{{var_j, spec.k}, {var_c, vl}}, 0}};
    lc.body.push_back(vlb);
    Instruction mul = em.vinstr(
        flt ? Opcode::vfmul
            : (path.widen_factor == 2 ? Opcode::vwmul : Opcode::vmul));
    mul.vd = regs.prod_vec;
    mul.vs1 = regs.a_vec;
    mul.vs2 = regs.b_vec;
    lc.body.push_back(mul);
  }
  if (flt) {
    Instruction red = em.vinstr(Opcode::vfredsum);
    red.vd = regs.red;
    red.vs2 = regs.prod_vec;
    red.vs1 = regs.red;
    lc.body.push_back(red);
  } else if (spec.in_dtype == DType::Int8) {
    em.ensure_ctx(lc.body, 2 * in_sew, std::min(8, path.src_lmul * 2), vl);
    Instruction red = em.vinstr(Opcode::vwredsum);
    red.vd = regs.red;
    red.vs2 = regs.prod_vec;
    red.vs1 = regs.red;
    lc.body.push_back(red);
  } else {
    em.ensure_ctx(lc.body, acc_sew, 8, vl);
    Instruction red = em.vinstr(Opcode::vredsum);
    red.vd = regs.red;
    red.vs2 = regs.prod_vec;
    red.vs1 = regs.red;
    lc.body.push_back(red);
  }
  em.ctx.reset();
  lj.body.push_back(std::move(lc));

  // add the bias element and store this single output element
  em.ensure_ctx(lj.body, acc_sew, 1, 1);
  {
    Instruction vle = em.vinstr(Opcode::vle);
    vle.vd = regs.c_vec;
    vle.mem = {d_id, {{{var_i, spec.n}, {var_j, 1}}, 0}};
    lj.body.push_back(vle);
    Instruction add = em.vinstr(flt ? Opcode::vfadd : Opcode::vadd);
    add.vd = regs.out;
    add.vs1 = regs.red;
    add.vs2 = regs.c_vec;
    lj.body.push_back(add);
    Instruction vse = em.vinstr(Opcode::vse);
    vse.vd = regs.out;
    vse.mem = {d_id, {{{var_i, spec.n}, {var_j, 1}}, 0}};
    lj.body.push_back(vse);
  }
  em.ctx.reset();

  li.body.push_back(std::move(lj));
  em.program.items.push_back(std::move(li));

  if (nest.epilogue.has_value())
    em.emit_block(em.program.items, *nest.epilogue, nullptr);
  return std::move(em.program);
}

}  // namespace rvvtune
