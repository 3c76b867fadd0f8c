// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/codegen_c.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

#include "rvvtune/error.hpp"

namespace rvvtune {

namespace {

std::string type_code(DType t) {
  switch (t) {
    case DType::Int8: return "i8";
    case DType::Int16: return "i16";
    case DType::Int32: return "i32";
    case DType::Float16: return "f16";
    case DType::Float32: return "f32";
  }
  return "?";
}

std::string c_type(DType t) {
  switch (t) {
    case DType::Int8: return "int8_t";
    case DType::Int16: return "int16_t";
    case DType::Int32: return "int32_t";
    case DType::Float16: return "_Float16";
    case DType::Float32: return "float";
  }
  return "?";
}

std::string lmul_code(int lmul) {
  if (lmul != 1 && lmul != 2 && lmul != 4 && lmul != 8)
    throw ConfigError("illegal LMUL " + std::to_string(lmul) +
                      " for intrinsic naming");
  return "m" + std::to_string(lmul);
}

DType widened(DType t) {
  switch (t) {
    case DType::Int8: return DType::Int16;
    case DType::Int16: return DType::Int32;
    default:
      throw ConfigError("no widening from " + dtype_name(t));
  }
}

std::string vreg_type(DType t, int lmul) {
  std::string base = is_float(t) ? "vfloat" : "vint";
  return base + std::to_string(sew_bits(t)) + lmul_code(lmul) + "_t";
}

}  // namespace

std::string intrinsic_name(Opcode op, DType elem, int lmul) {
  const int sew = sew_bits(elem);
  const std::string tl = type_code(elem) + lmul_code(lmul);
  switch (op) {
    case Opcode::vsetvl:
      return "__riscv_vsetvl_e" + std::to_string(sew) + lmul_code(lmul);
    case Opcode::vle:
      return "__riscv_vle" + std::to_string(sew) + "_v_" + tl;
    case Opcode::vse:
      return "__riscv_vse" + std::to_string(sew) + "_v_" + tl;
    case Opcode::vmv_vx:
      return is_float(elem) ? "__riscv_vfmv_v_f_" + tl
                            : "__riscv_vmv_v_x_" + tl;
    case Opcode::vmv_sx:
      return is_float(elem) ? "__riscv_vfmv_s_f_" + tl
                            : "__riscv_vmv_s_x_" + tl;
    case Opcode::vmv_vv:
      return "__riscv_vmv_v_v_" + tl;
    case Opcode::vmul:
      if (is_float(elem)) throw ConfigError("vmul is integer-only");
      return "__riscv_vmul_vv_" + tl;
    case Opcode::vwmul: {
      if (is_float(elem)) throw ConfigError("vwmul is integer-only");
      if (2 * lmul > 8)
        throw ConfigError("vwmul destination group would exceed 8 registers");
      return "__riscv_vwmul_vv_" + type_code(widened(elem)) +
             lmul_code(2 * lmul);
    }
    case Opcode::vfmul:
      if (!is_float(elem)) throw ConfigError("vfmul is float-only");
      return "__riscv_vfmul_vv_" + tl;
    case Opcode::vredsum:
      if (is_float(elem)) throw ConfigError("vredsum is integer-only");
      return "__riscv_vredsum_vs_" + tl + "_" + type_code(elem) + "m1";
    case Opcode::vwredsum:
      if (is_float(elem)) throw ConfigError("vwredsum is integer-only");
      return "__riscv_vwredsum_vs_" + tl + "_" + type_code(widened(elem)) +
             "m1";
    case Opcode::vfredsum:
      if (!is_float(elem)) throw ConfigError("vfredusum is float-only");
      return "__riscv_vfredusum_vs_" + tl + "_" + type_code(elem) + "m1";
    case Opcode::vslideup:
      return "__riscv_vslideup_vx_" + tl;
    case Opcode::vadd:
      if (is_float(elem)) throw ConfigError("vadd is integer-only");
      return "__riscv_vadd_vv_" + tl;
    case Opcode::vfadd:
      if (!is_float(elem)) throw ConfigError("vfadd is float-only");
      return "__riscv_vfadd_vv_" + tl;
    case Opcode::vmacc:
      if (is_float(elem)) throw ConfigError("vmacc is integer-only");
      return "__riscv_vmacc_vv_" + tl;
    case Opcode::vfmacc:
      if (!is_float(elem)) throw ConfigError("vfmacc is float-only");
      return "__riscv_vfmacc_vv_" + tl;
    case Opcode::scalar:
      throw ConfigError("scalar micro-ops have no intrinsic name");
  }
  throw ConfigError("unhandled opcode in intrinsic naming");
}

namespace {

std::string affine_str(const AffineIndex& idx) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [id, c] : idx.terms) {
    if (!first) os << " + ";
    first = false;
    if (c == 1)
      os << id;
    else
      os << id << " * " << c;
  }
  if (idx.offset != 0 || first) {
    if (!first) os << " + ";
    os << idx.offset;
  }
  return os.str();
}

std::string access_str(const LoopNest& nest, const BufferAccess& access,
                       std::int64_t extra_elems = 0) {
  const Buffer& buf = nest.buffer(access.buffer);
  std::vector<std::int64_t> strides(buf.shape.size());
  std::int64_t acc = 1;
  for (std::size_t i = buf.shape.size(); i-- > 0;) {
    strides[i] = acc;
    acc *= buf.shape[i];
  }
  std::ostringstream os;
  os << access.buffer << "[";
  for (std::size_t d = 0; d < access.indices.size(); ++d) {
    if (d) os << " + ";
    os << "(" << affine_str(access.indices[d]) << ")";
    if (strides[d] != 1) os << " * " << strides[d];
  }
  if (extra_elems != 0) os << " + " << extra_elems;
  os << "]";
  return os.str();
}

constexpr const char* kRequantHelper =
    "static inline int8_t requant_i32(int32_t acc, int32_t multiplier, int shift,\n"
    "                                 int zero_point) {\n"
    "  int64_t prod = (int64_t)acc * (int64_t)multiplier;\n"
    "  int total_shift = 31 + shift;\n"
    "  int64_t rounding = (int64_t)1 << (total_shift - 1);\n"
    "  int64_t scaled = prod >= 0 ? (prod + rounding) >> total_shift\n"
    "                             : -((-prod + rounding) >> total_shift);\n"
    "  scaled += zero_point;\n"
    "  if (scaled < -128) scaled = -128;\n"
    "  if (scaled > 127) scaled = 127;\n"
    "  return (int8_t)scaled;\n"
    "}\n";

struct CEmitter {
  const LoopNest& nest;
  std::ostringstream body;
  int indent = 1;
  std::int64_t vector_calls = 0;
  bool uses_requant = false;
  // mirrors the lowering's vsetvl dedupe so the emitted call sequence is
  // 1:1 with the lowered program
  std::optional<std::tuple<int, int, std::int64_t>> ctx;
  DType ctx_elem = DType::Int8;

  explicit CEmitter(const LoopNest& n) : nest(n) {}

  void line(const std::string& s) {
    for (int i = 0; i < indent; ++i) body << "  ";
    body << s << "\n";
  }

  std::string vcall(const std::string& name, const std::string& args) {
    ++vector_calls;
    return name + "(" + args + ")";
  }

  void ensure_ctx(DType elem, int lmul, std::int64_t vl) {
    auto want = std::make_tuple(sew_bits(elem), lmul, vl);
    ctx_elem = elem;
    if (ctx.has_value() && *ctx == want) return;
    ctx = want;
    line("vl = " +
         vcall(intrinsic_name(Opcode::vsetvl, elem, lmul),
               std::to_string(vl)) +
         ";");
  }

  std::string zero_literal(DType t) {
    if (t == DType::Float32) return "0.0f";
    if (t == DType::Float16) return "(_Float16)0.0f";
    return "0";
  }

  void emit_multivmul(const IntrinsicCallStmt& call,
                      const IntrinsicVariant& v) {
    const DType in = v.in_dtype;
    const DType acc = v.acc_dtype;
    const bool flt = is_float(in);
    const DType prod_t = flt ? in : (v.widen_factor == 2 ? widened(in) : in);
    const int prod_lmul = std::min(8, v.src_lmul * v.widen_factor);
    const std::int64_t b_row = nest.buffer(call.b.buffer).shape.back();

    line("{");
    ++indent;
    ensure_ctx(in, v.src_lmul, v.vl);
    line(vreg_type(in, v.src_lmul) + " A_vec = " +
         vcall(intrinsic_name(Opcode::vle, in, v.src_lmul),
               "&" + access_str(nest, call.a) + ", vl") +
         ";");
    ensure_ctx(acc, 1, call.j);
    line(vreg_type(acc, 1) + " C_vec = " +
         vcall(intrinsic_name(Opcode::vle, acc, 1),
               "&" + access_str(nest, call.c) + ", vl") +
         ";");
    line(vreg_type(acc, 1) + " out_vec;");
    for (std::int64_t j = 0; j < call.j; ++j) {
      line("{");
      ++indent;
      ensure_ctx(acc, 1, 1);
      line(vreg_type(acc, 1) + " red_vec = " +
           vcall(intrinsic_name(Opcode::vmv_sx, acc, 1),
                 zero_literal(acc) + ", vl") +
           ";");
      ensure_ctx(in, v.src_lmul, v.vl);
      line(vreg_type(in, v.src_lmul) + " B_vec = " +
           vcall(intrinsic_name(Opcode::vle, in, v.src_lmul),
                 "&" + access_str(nest, call.b, j * b_row) + ", vl") +
           ";");
      const Opcode mul_op =
          flt ? Opcode::vfmul
              : (v.widen_factor == 2 ? Opcode::vwmul : Opcode::vmul);
      line(vreg_type(prod_t, prod_lmul) + " prod_vec = " +
           vcall(intrinsic_name(mul_op, in, v.src_lmul),
                 "A_vec, B_vec, vl") +
           ";");
      if (flt) {
        line("red_vec = " +
             vcall(intrinsic_name(Opcode::vfredsum, in, v.src_lmul),
                   "prod_vec, red_vec, vl") +
             ";");
      } else if (in == DType::Int8) {
        ensure_ctx(prod_t, prod_lmul, v.vl);
        line("red_vec = " +
             vcall(intrinsic_name(Opcode::vwredsum, prod_t, prod_lmul),
                   "prod_vec, red_vec, vl") +
             ";");
      } else {
        ensure_ctx(acc, 8, v.vl);
        line("red_vec = " +
             vcall(intrinsic_name(Opcode::vredsum, acc, 8),
                   "prod_vec, red_vec, vl") +
             ";");
      }
      ensure_ctx(acc, 1, 1);
      if (j == 0) {
        line("out_vec = " +
             vcall(intrinsic_name(Opcode::vmv_vv, acc, 1), "red_vec, vl") +
             ";");
      } else {
        line(vreg_type(acc, 1) + " tmp_vec = " +
             vcall(intrinsic_name(Opcode::vmv_vv, acc, 1), "red_vec, vl") +
             ";");
        ensure_ctx(acc, 1, j + 1);
        line("out_vec = " +
             vcall(intrinsic_name(Opcode::vslideup, acc, 1),
                   "out_vec, tmp_vec, " + std::to_string(j) + ", vl") +
             ";");
      }
      --indent;
      line("}");
    }
    ensure_ctx(acc, 1, call.j);
    line("out_vec = " +
         vcall(intrinsic_name(flt ? Opcode::vfadd : Opcode::vadd, acc, 1),
               "out_vec, C_vec, vl") +
         ";");
    line(vcall(intrinsic_name(Opcode::vse, acc, 1),
               "&" + access_str(nest, call.c) + ", out_vec, vl") +
         ";");
    --indent;
    line("}");
  }

  void emit_vmacc(const IntrinsicCallStmt& call, const IntrinsicVariant& v) {
    const DType t = v.in_dtype;
    line("{");
    ++indent;
    ensure_ctx(t, 8, v.vl);
    line(vreg_type(t, 8) + " A_vec = " +
         vcall(intrinsic_name(Opcode::vle, t, 8),
               "&" + access_str(nest, call.a) + ", vl") +
         ";");
    line(vreg_type(t, 8) + " B_vec = " +
         vcall(intrinsic_name(Opcode::vle, t, 8),
               "&" + access_str(nest, call.b) + ", vl") +
         ";");
    line(vreg_type(t, 8) + " out_vec = " +
         vcall(intrinsic_name(Opcode::vle, t, 8),
               "&" + access_str(nest, call.c) + ", vl") +
         ";");
    line("out_vec = " +
         vcall(intrinsic_name(is_float(t) ? Opcode::vfmacc : Opcode::vmacc,
                              t, 8),
               "out_vec, A_vec, B_vec, vl") +
         ";");
    line(vcall(intrinsic_name(Opcode::vse, t, 8),
               "&" + access_str(nest, call.c) + ", out_vec, vl") +
         ";");
    --indent;
    line("}");
  }

  void emit_scalar_stmt(const Stmt& stmt) {
    if (std::holds_alternative<MacStmt>(stmt)) {
      const auto& s = std::get<MacStmt>(stmt);
      const DType acc = nest.buffer(s.dst.buffer).dtype;
      // widen products to the accumulation domain; float16 computes in float
      const std::string cast = is_float(acc) ? "(float)" : "(int32_t)";
      line(access_str(nest, s.dst) + " += " + cast +
           access_str(nest, s.a) + " * " + cast + access_str(nest, s.b) +
           ";");
    } else if (std::holds_alternative<RequantStmt>(stmt)) {
      const auto& s = std::get<RequantStmt>(stmt);
      uses_requant = true;
      std::ostringstream os;
      os << access_str(nest, s.dst) << " = requant_i32("
         << access_str(nest, s.src) << ", " << s.params.multiplier << ", "
         << s.params.shift << ", " << s.params.zero_point << ");";
      line(os.str());
    } else if (std::holds_alternative<CopyStmt>(stmt)) {
      const auto& s = std::get<CopyStmt>(stmt);
      line(access_str(nest, s.dst) + " = " + access_str(nest, s.src) + ";");
    } else {
      throw LoweringError("intrinsic call in a scalar-only emission context");
    }
  }

  void emit_block(const StmtBlock& block, const Registry* registry,
                  bool allow_vector) {
    emit_band(block, 0, registry, allow_vector);
  }

  void emit_band(const StmtBlock& block, std::size_t depth,
                 const Registry* registry, bool allow_vector) {
    if (depth == block.loops.size()) {
      for (const auto& stmt : block.stmts) {
        if (std::holds_alternative<IntrinsicCallStmt>(stmt)) {
          if (!allow_vector || registry == nullptr)
            throw LoweringError(
                "intrinsic call in a scalar-only emission context");
          const auto& call = std::get<IntrinsicCallStmt>(stmt);
          VariantKey key{call.kind, call.in_dtype, call.vl,
                         call.kind == IntrinsicKind::MultiVMul ? call.j : 1};
          const IntrinsicVariant* v = registry->find(key);
          if (v == nullptr)
            throw LoweringError("unregistered variant " + key.str());
          if (call.kind == IntrinsicKind::MultiVMul)
            emit_multivmul(call, *v);
          else
            emit_vmacc(call, *v);
        } else {
          emit_scalar_stmt(stmt);
        }
      }
      return;
    }
    const Loop& loop = block.loops[depth];
    line("for (int64_t " + loop.id + " = 0; " + loop.id + " < " +
         std::to_string(loop.extent) + "; ++" + loop.id + ") {");
    ++indent;
    ctx.reset();  // every iteration re-establishes its vtype
    emit_band(block, depth + 1, registry, allow_vector);
    ctx.reset();
    --indent;
    line("}");
  }
};

std::string signature(const LoopNest& nest, const std::string& entry) {
  std::ostringstream os;
  os << "void " << entry << "(";
  bool first = true;
  for (const auto& buf : nest.buffers) {
    if (!first) os << ", ";
    first = false;
    if (buf.role == BufferRole::Input) os << "const ";
    os << c_type(buf.dtype) << " *" << buf.name;
  }
  os << ")";
  return os.str();
}

EmittedSource finish(const LoopNest& nest, CEmitter& em,
                     const std::string& entry, SourceKind kind,
                     bool needs_vl) {
  std::ostringstream os;
  os << "// " << entry << ": generated kernel for "
     << nest.spec.fingerprint() << "\n";
  os << "#include <stdint.h>\n";
  if (kind == SourceKind::Rvv) os << "#include <riscv_vector.h>\n";
  os << "\n";
  if (em.uses_requant) os << kRequantHelper << "\n";
  os << signature(nest, entry) << " {\n";
  if (needs_vl) os << "  size_t vl;\n";
  os << em.body.str();
  os << "}\n";

  EmittedSource out;
  out.text = os.str();
  out.entry_symbol = entry;
  out.kind = kind;
  out.byte_size = static_cast<std::int64_t>(out.text.size());
  out.static_vector_call_count = em.vector_calls;
  return out;
}

}  // namespace

EmittedSource emit_rvv_c(const LoopNest& nest, const Registry& registry,
                         const MachineConfig& machine) {
  (void)machine;
  bool has_intrinsic = false;
  for (const auto& stmt : nest.body.stmts)
    has_intrinsic |= std::holds_alternative<IntrinsicCallStmt>(stmt);
  if (!has_intrinsic)
    throw LoweringError(
        "nest has no tensorized block; use the scalar emitter");

  CEmitter em(nest);
  em.emit_block(nest.body, &registry, /*allow_vector=*/true);
  if (nest.epilogue.has_value())
    em.emit_block(*nest.epilogue, nullptr, /*allow_vector=*/false);
  return finish(nest, em, nest.spec.fingerprint() + "_rvv", SourceKind::Rvv,
                /*needs_vl=*/true);
}

EmittedSource emit_scalar_c(const LoopNest& nest) {
  CEmitter em(nest);
  em.emit_block(nest.body, nullptr, /*allow_vector=*/false);
  if (nest.epilogue.has_value())
    em.emit_block(*nest.epilogue, nullptr, /*allow_vector=*/false);
  return finish(nest, em, nest.spec.fingerprint() + "_scalar",
                SourceKind::Scalar, /*needs_vl=*/false);
}

}  // namespace rvvtune
