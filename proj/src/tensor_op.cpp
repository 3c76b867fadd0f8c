// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/tensor_op.hpp"

#include <algorithm>
#include <sstream>

#include "rvvtune/error.hpp"

namespace rvvtune {

std::vector<std::string> RequantParams::violations() const {
  std::vector<std::string> out;
  if (multiplier <= 0) out.push_back("requant multiplier must be > 0");
  if (shift < 0 || shift > 31)
    out.push_back("requant shift must be in [0, 31]");
  if (zero_point < -128 || zero_point > 127)
    out.push_back("requant zero_point must be in [-128, 127]");
  return out;
}

std::int8_t requantize(std::int32_t acc, const RequantParams& p) {
  const std::int64_t prod =
      static_cast<std::int64_t>(acc) * static_cast<std::int64_t>(p.multiplier);
  const int total_shift = 31 + p.shift;
  const std::int64_t rounding = std::int64_t{1} << (total_shift - 1);
  std::int64_t scaled;
  if (prod >= 0) {
    scaled = (prod + rounding) >> total_shift;
  } else {
    scaled = -((-prod + rounding) >> total_shift);  // round half away from zero
  }
  scaled += p.zero_point;
  scaled = std::clamp<std::int64_t>(scaled, -128, 127);
  return static_cast<std::int8_t>(scaled);
}

std::string op_kind_name(OpKind k) {
  return k == OpKind::MatMul ? "matmul" : "macc";
}

TensorOpSpec TensorOpSpec::quantized_matmul(std::int64_t m, std::int64_t n,
                                            std::int64_t k,
                                            const RequantParams& rq) {
  TensorOpSpec s;
  s.kind = OpKind::MatMul;
  s.m = m;
  s.n = n;
  s.k = k;
  s.in_dtype = DType::Int8;
  s.acc_dtype = DType::Int32;
  s.out_dtype = DType::Int8;
  s.requant = rq;
  return s;
}

TensorOpSpec TensorOpSpec::float_matmul(std::int64_t m, std::int64_t n,
                                        std::int64_t k, DType dtype) {
  TensorOpSpec s;
  s.kind = OpKind::MatMul;
  s.m = m;
  s.n = n;
  s.k = k;
  s.in_dtype = s.acc_dtype = s.out_dtype = dtype;
  return s;
}

TensorOpSpec TensorOpSpec::macc(std::int64_t n, DType dtype) {
  TensorOpSpec s;
  s.kind = OpKind::Macc;
  s.m = 1;
  s.n = n;
  s.k = 1;
  s.in_dtype = s.acc_dtype = s.out_dtype = dtype;
  return s;
}

std::vector<std::string> TensorOpSpec::violations() const {
  std::vector<std::string> out;
  auto extent_ok = [&](const char* name, std::int64_t v) {
    if (v < 1) {
      std::ostringstream os;
      os << "extent " << name << " must be >= 1, got " << v;
      out.push_back(os.str());
    }
  };
  if (kind == OpKind::MatMul) {
    extent_ok("m", m);
    extent_ok("n", n);
    extent_ok("k", k);
    if (in_dtype == DType::Int8) {
      if (acc_dtype != DType::Int32)
        out.push_back("int8 matmul requires acc_dtype int32");
      if (out_dtype != DType::Int8)
        out.push_back("int8 matmul requires out_dtype int8");
      if (!requant.has_value()) {
        out.push_back("int8 matmul requires requant parameters");
      } else {
        auto rv = requant->violations();
        out.insert(out.end(), rv.begin(), rv.end());
      }
    } else if (is_float(in_dtype)) {
      if (acc_dtype != in_dtype || out_dtype != in_dtype)
        out.push_back("float matmul requires in = acc = out dtype");
      if (requant.has_value())
        out.push_back("float matmul takes no requant parameters");
    } else {
      out.push_back("matmul in_dtype must be int8 or float");
    }
  } else {
    extent_ok("n", n);
    if (acc_dtype != in_dtype || out_dtype != in_dtype)
      out.push_back("macc requires in = acc = out dtype");
    if (requant.has_value()) out.push_back("macc takes no requant parameters");
  }
  return out;
}

void TensorOpSpec::ensure_valid() const {
  auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid " + op_kind_name(kind) + " spec:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw ValidationError(msg);
}

std::string TensorOpSpec::fingerprint() const {
  std::ostringstream os;
  if (kind == OpKind::MatMul) {
    os << "matmul_m" << m << "n" << n << "k" << k << "_"
       << dtype_name(in_dtype);
  } else {
    os << "macc_n" << n << "_" << dtype_name(in_dtype);
  }
  return os.str();
}

void WorkloadGraph::ensure_valid() const {
  if (ops.empty()) throw ValidationError("workload graph has no ops");
  for (const auto& op : ops) op.ensure_valid();
}

}  // namespace rvvtune
