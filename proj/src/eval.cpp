// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rvvtune/error.hpp"
#include "value_io.hpp"

namespace rvvtune {

namespace {

using detail::f32_add;
using detail::f32_mul;
using detail::load_float;
using detail::load_int;
using detail::store_float;
using detail::store_int;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct Env {
  std::vector<std::pair<LoopId, std::int64_t>> vars;

  std::int64_t lookup(const LoopId& id) const {
    for (const auto& [vid, v] : vars)
      if (vid == id) return v;
    throw ValidationError("evaluation references unbound loop '" + id + "'");
  }
};

std::int64_t eval_index(const AffineIndex& idx, const Env& env) {
  std::int64_t v = idx.offset;
  for (const auto& [id, c] : idx.terms) v += c * env.lookup(id);
  return v;
}

struct Evaluator {
  const LoopNest& nest;
  BufferMap& buffers;

  std::vector<std::int64_t> strides(const Buffer& buf) const {
    std::vector<std::int64_t> s(buf.shape.size());
    std::int64_t acc = 1;
    for (std::size_t i = buf.shape.size(); i-- > 0;) {
      s[i] = acc;
      acc *= buf.shape[i];
    }
    return s;
  }

  std::int64_t flat_offset(const BufferAccess& access, const Env& env) const {
    const Buffer& buf = nest.buffer(access.buffer);
    auto st = strides(buf);
    std::int64_t flat = 0;
    for (std::size_t d = 0; d < access.indices.size(); ++d)
      flat += eval_index(access.indices[d], env) * st[d];
    return flat;
  }

  std::uint8_t* elem_ptr(const BufferAccess& access, const Env& env,
                         std::int64_t extra_elems = 0) {
    const Buffer& buf = nest.buffer(access.buffer);
    std::int64_t off = flat_offset(access, env) + extra_elems;
    auto& bytes = buffers.at(access.buffer);
    std::int64_t byte_off = off * elem_bytes(buf.dtype);
    if (byte_off < 0 ||
        byte_off + elem_bytes(buf.dtype) > static_cast<std::int64_t>(bytes.size()))
      throw ValidationError("evaluation accesses '" + access.buffer +
                            "' out of bounds");
    return bytes.data() + byte_off;
  }

  void exec_mac(const MacStmt& s, const Env& env) {
    const DType in = nest.buffer(s.a.buffer).dtype;
    const DType acc = nest.buffer(s.dst.buffer).dtype;
    std::uint8_t* dst = elem_ptr(s.dst, env);
    const std::uint8_t* pa = elem_ptr(s.a, env);
    const std::uint8_t* pb = elem_ptr(s.b, env);
    if (is_float(acc)) {
      double prod = f32_mul(load_float(in, pa), load_float(in, pb));
      store_float(acc, dst, f32_add(load_float(acc, dst), prod));
    } else {
      std::int64_t prod = load_int(in, pa) * load_int(in, pb);
      store_int(acc, dst, load_int(acc, dst) + prod);
    }
  }

  void exec_requant(const RequantStmt& s, const Env& env) {
    const std::uint8_t* src = elem_ptr(s.src, env);
    std::uint8_t* dst = elem_ptr(s.dst, env);
    auto acc = static_cast<std::int32_t>(load_int(DType::Int32, src));
    store_int(DType::Int8, dst, requantize(acc, s.params));
  }

  void exec_copy(const CopyStmt& s, const Env& env) {
    const Buffer& sb = nest.buffer(s.src.buffer);
    const std::uint8_t* src = elem_ptr(s.src, env);
    std::uint8_t* dst = elem_ptr(s.dst, env);
    std::memcpy(dst, src, elem_bytes(sb.dtype));
  }

  // Contract-level intrinsic semantics: per-row dot products summed from
  // zero (products widened), the row's addend applied last. Matches the
  // register-level lowering bit-for-bit on integers.
  void exec_intrinsic(const IntrinsicCallStmt& s, const Env& env) {
    const Buffer& bbuf = nest.buffer(s.b.buffer);
    const std::int64_t b_row_stride = bbuf.shape.back();
    if (s.kind == IntrinsicKind::MultiVMul) {
      for (std::int64_t jj = 0; jj < s.j; ++jj) {
        const std::uint8_t* pc = elem_ptr(s.c, env, jj);
        std::uint8_t* pd = elem_ptr(s.c, env, jj);
        if (is_float(s.acc_dtype)) {
          double sum = 0.0;
          for (std::int64_t ii = 0; ii < s.vl; ++ii) {
            double a = load_float(s.in_dtype, elem_ptr(s.a, env, ii));
            double b = load_float(s.in_dtype,
                                  elem_ptr(s.b, env, jj * b_row_stride + ii));
            sum = f32_add(sum, f32_mul(a, b));
          }
          if (s.acc_dtype == DType::Float16)
            sum = fp16_to_f32(f32_to_fp16(static_cast<float>(sum)));
          store_float(s.acc_dtype, pd,
                      f32_add(load_float(s.acc_dtype, pc), sum));
        } else {
          std::int64_t sum = 0;
          for (std::int64_t ii = 0; ii < s.vl; ++ii) {
            std::int64_t a = load_int(s.in_dtype, elem_ptr(s.a, env, ii));
            std::int64_t b = load_int(
                s.in_dtype, elem_ptr(s.b, env, jj * b_row_stride + ii));
            sum += a * b;
          }
          store_int(s.acc_dtype, pd, load_int(s.acc_dtype, pc) + sum);
        }
      }
    } else {
      for (std::int64_t ii = 0; ii < s.vl; ++ii) {
        std::uint8_t* pc = elem_ptr(s.c, env, ii);
        if (is_float(s.acc_dtype)) {
          double a = load_float(s.in_dtype, elem_ptr(s.a, env, ii));
          double b = load_float(s.in_dtype, elem_ptr(s.b, env, ii));
          store_float(s.acc_dtype, pc,
                      f32_add(load_float(s.acc_dtype, pc), f32_mul(a, b)));
        } else {
          std::int64_t a = load_int(s.in_dtype, elem_ptr(s.a, env, ii));
          std::int64_t b = load_int(s.in_dtype, elem_ptr(s.b, env, ii));
          store_int(s.acc_dtype, pc, load_int(s.acc_dtype, pc) + a * b);
        }
      }
    }
  }

  void exec_stmt(const Stmt& stmt, const Env& env) {
    if (std::holds_alternative<MacStmt>(stmt))
      exec_mac(std::get<MacStmt>(stmt), env);
    else if (std::holds_alternative<RequantStmt>(stmt))
      exec_requant(std::get<RequantStmt>(stmt), env);
    else if (std::holds_alternative<CopyStmt>(stmt))
      exec_copy(std::get<CopyStmt>(stmt), env);
    else
      exec_intrinsic(std::get<IntrinsicCallStmt>(stmt), env);
  }

  void run_block(const StmtBlock& block) {
    Env env;
    env.vars.reserve(block.loops.size());
    for (const auto& loop : block.loops) env.vars.emplace_back(loop.id, 0);
    walk(block, 0, env);
  }

  void walk(const StmtBlock& block, std::size_t depth, Env& env) {
    if (depth == block.loops.size()) {
      for (const auto& stmt : block.stmts) exec_stmt(stmt, env);
      return;
    }
    for (std::int64_t i = 0; i < block.loops[depth].extent; ++i) {
      env.vars[depth].second = i;
      walk(block, depth + 1, env);
    }
  }
};

}  // namespace

BufferMap make_buffer_map(const LoopNest& nest) {
  BufferMap out;
  for (const auto& buf : nest.buffers)
    out[buf.name] = std::vector<std::uint8_t>(buf.byte_size(), 0);
  return out;
}

BufferMap make_workload_inputs(const TensorOpSpec& spec, std::uint64_t seed) {
  const LoopNest nest = spec.kind == OpKind::MatMul ? build_matmul_nest(spec)
                                                    : build_macc_nest(spec);
  std::mt19937_64 rng(seed ^ fnv1a(spec.fingerprint()));
  // Uniform doubles built from raw draws so contents are identical across
  // platforms and standard library versions.
  auto unit = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  BufferMap out = make_buffer_map(nest);
  for (const auto& buf : nest.buffers) {
    if (buf.role == BufferRole::Output) continue;
    auto& bytes = out[buf.name];
    for (std::int64_t i = 0; i < buf.elem_count(); ++i) {
      std::uint8_t* p = bytes.data() + i * elem_bytes(buf.dtype);
      switch (buf.dtype) {
        case DType::Int8:
          detail::store_int(buf.dtype, p,
                            static_cast<std::int64_t>(rng() % 256) - 128);
          break;
        case DType::Int16:
        case DType::Int32:
          detail::store_int(buf.dtype, p,
                            static_cast<std::int64_t>(rng() % 2001) - 1000);
          break;
        case DType::Float16:
        case DType::Float32:
          detail::store_float(buf.dtype, p, unit() * 2.0 - 1.0);
          break;
      }
    }
  }
  return out;
}

void evaluate_nest(const LoopNest& nest, BufferMap& buffers) {
  for (const auto& buf : nest.buffers) {
    auto it = buffers.find(buf.name);
    if (it == buffers.end() ||
        static_cast<std::int64_t>(it->second.size()) != buf.byte_size())
      throw ValidationError("buffer map missing or mis-sized for '" +
                            buf.name + "'");
  }
  Evaluator ev{nest, buffers};
  ev.run_block(nest.body);
  if (nest.epilogue.has_value()) ev.run_block(*nest.epilogue);
}

double max_abs_diff(DType dtype, const std::vector<std::uint8_t>& a,
                    const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  const int eb = elem_bytes(dtype);
  double worst = 0.0;
  for (std::size_t off = 0; off + eb <= a.size(); off += eb) {
    double va, vb;
    if (is_float(dtype)) {
      va = detail::load_float(dtype, a.data() + off);
      vb = detail::load_float(dtype, b.data() + off);
    } else {
      va = static_cast<double>(detail::load_int(dtype, a.data() + off));
      vb = static_cast<double>(detail::load_int(dtype, b.data() + off));
    }
    worst = std::max(worst, std::abs(va - vb));
  }
  return worst;
}

double relative_error(DType dtype, const std::vector<std::uint8_t>& a,
                      const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  if (is_integer(dtype)) return a == b ? 0.0 : max_abs_diff(dtype, a, b);
  const int eb = elem_bytes(dtype);
  double scale = 0.0;
  for (std::size_t off = 0; off + eb <= b.size(); off += eb)
    scale = std::max(scale, std::abs(detail::load_float(dtype, b.data() + off)));
  return max_abs_diff(dtype, a, b) / std::max(scale, 1e-30);
}

}  // namespace rvvtune
