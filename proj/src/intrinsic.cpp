// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/intrinsic.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "value_io.hpp"

namespace rvvtune {

std::string IntrinsicVariant::name() const { return key().str(); }

DtypePath dtype_path(DType in_dtype) {
  switch (in_dtype) {
    case DType::Int8: return {DType::Int32, 4, 2};
    case DType::Int16: return {DType::Int32, 4, 2};
    case DType::Int32: return {DType::Int32, 8, 1};
    case DType::Float16: return {DType::Float16, 8, 1};
    case DType::Float32: return {DType::Float32, 8, 1};
  }
  return {DType::Float32, 8, 1};
}

namespace {

std::vector<std::int64_t> halving_vls(std::int64_t vl_max) {
  std::vector<std::int64_t> out;
  for (std::int64_t vl = vl_max; vl >= 4; vl /= 2) out.push_back(vl);
  return out;
}

void check_variant(const IntrinsicVariant& v, const MachineConfig& machine) {
  const std::int64_t cap =
      vlmax(machine.vlen, sew_bits(v.in_dtype), v.src_lmul);
  if (v.vl < 4 || v.vl > cap)
    throw ConfigError("variant " + v.name() + " has VL outside [4, vlmax]");
  std::int64_t r = cap;
  while (r > v.vl) r /= 2;
  if (r != v.vl)
    throw ConfigError("variant " + v.name() +
                      " VL is not vlmax / 2^i for any i");
  if (v.src_lmul * v.widen_factor > 8)
    throw ConfigError("variant " + v.name() +
                      " needs an illegal register group (src_lmul * "
                      "widen_factor > 8)");
}

}  // namespace

std::vector<IntrinsicVariant> enumerate_variants(const MachineConfig& machine,
                                                 DType in_dtype) {
  machine.ensure_valid();
  std::vector<IntrinsicVariant> out;

  // MultiVMul: dtype-specific widening path, J in {VLEN/32, 1}.
  const DtypePath path = dtype_path(in_dtype);
  const std::int64_t mv_vlmax =
      vlmax(machine.vlen, sew_bits(in_dtype), path.src_lmul);
  const std::int64_t j_wide = machine.vlen / 32;
  for (std::int64_t vl : halving_vls(mv_vlmax)) {
    for (std::int64_t j : {j_wide, std::int64_t{1}}) {
      if (j == j_wide && j_wide == 1) continue;  // dedupe
      IntrinsicVariant v;
      v.kind = IntrinsicKind::MultiVMul;
      v.in_dtype = in_dtype;
      v.acc_dtype = path.acc_dtype;
      v.vl = vl;
      v.j = j;
      v.src_lmul = path.src_lmul;
      v.widen_factor = path.widen_factor;
      out.push_back(v);
    }
  }

  // VMacc: no widening, in = acc dtype, LMUL 8 throughout.
  const std::int64_t macc_vlmax = vlmax(machine.vlen, sew_bits(in_dtype), 8);
  for (std::int64_t vl : halving_vls(macc_vlmax)) {
    IntrinsicVariant v;
    v.kind = IntrinsicKind::VMacc;
    v.in_dtype = in_dtype;
    v.acc_dtype = in_dtype;
    v.vl = vl;
    v.j = 1;
    v.src_lmul = 8;
    v.widen_factor = 1;
    out.push_back(v);
  }
  return out;
}

Registry Registry::build(const MachineConfig& machine,
                         std::span<const DType> in_dtypes) {
  Registry reg;
  reg.machine_ = machine;
  std::set<std::tuple<IntrinsicKind, DType, std::int64_t, std::int64_t>> keys;
  for (DType dt : in_dtypes) {
    for (auto& v : enumerate_variants(machine, dt)) {
      check_variant(v, machine);
      auto key = std::make_tuple(v.kind, v.in_dtype, v.vl, v.j);
      if (!keys.insert(key).second)
        throw ConfigError("duplicate intrinsic variant " + v.name());
      reg.variants_.push_back(v);
    }
  }
  return reg;
}

Registry Registry::build(const MachineConfig& machine,
                         std::initializer_list<DType> in_dtypes) {
  return build(machine, std::span<const DType>(in_dtypes.begin(),
                                               in_dtypes.size()));
}

const IntrinsicVariant* Registry::find(const VariantKey& key) const {
  for (const auto& v : variants_)
    if (v.key() == key) return &v;
  return nullptr;
}

// ---- matching / tensorization ----------------------------------------------

namespace {

struct MatchInfo {
  const MacStmt* mac = nullptr;
  // consumed loops, innermost last
  std::vector<LoopId> consumed;
  std::string why;  // failure reason when mac == nullptr
};

MatchInfo match_info(const LoopNest& nest, const IntrinsicVariant& variant) {
  MatchInfo info;
  if (nest.body.stmts.size() != 1 ||
      !std::holds_alternative<MacStmt>(nest.body.stmts[0])) {
    info.why = "innermost block is not a single scalar multiply-accumulate";
    return info;
  }
  const auto& mac = std::get<MacStmt>(nest.body.stmts[0]);
  const DType in = nest.buffer(mac.a.buffer).dtype;
  const DType acc = nest.buffer(mac.dst.buffer).dtype;
  if (in != variant.in_dtype || acc != variant.acc_dtype) {
    info.why = "dtype mismatch: block is " + dtype_name(in) + "/" +
               dtype_name(acc) + ", variant is " +
               dtype_name(variant.in_dtype) + "/" +
               dtype_name(variant.acc_dtype);
    return info;
  }

  const auto& loops = nest.body.loops;
  auto extent_err = [&](const char* what, std::int64_t got,
                        std::int64_t want) {
    std::ostringstream os;
    os << what << " extent " << got << " does not equal the variant's "
       << want << " (exact match required)";
    return os.str();
  };

  if (variant.kind == IntrinsicKind::MultiVMul) {
    if (nest.spec.kind != OpKind::MatMul) {
      info.why = "multivmul only matches matmul blocks";
      return info;
    }
    if (loops.size() < 2) {
      info.why = "matmul block needs at least two loops to tensorize";
      return info;
    }
    const Loop& lj = loops[loops.size() - 2];
    const Loop& lk = loops[loops.size() - 1];
    if (lk.extent != variant.vl) {
      info.why = extent_err("inner k", lk.extent, variant.vl);
      return info;
    }
    if (lj.extent != variant.j) {
      info.why = extent_err("inner n", lj.extent, variant.j);
      return info;
    }
    // Unit-stride requirement: the reduction loop walks the last axis of A
    // and B with stride 1, the row loop walks B rows and the output with
    // stride 1.
    if (mac.a.indices.back().coeff(lk.id) != 1 ||
        mac.b.indices.back().coeff(lk.id) != 1 ||
        mac.dst.indices.back().coeff(lk.id) != 0 ||
        mac.a.indices.back().coeff(lj.id) != 0 ||
        mac.b.indices.front().coeff(lj.id) != 1 ||
        mac.dst.indices.back().coeff(lj.id) != 1) {
      info.why = "inner loops do not address the block with unit stride";
      return info;
    }
    info.consumed = {lj.id, lk.id};
  } else {
    if (nest.spec.kind != OpKind::Macc) {
      info.why = "vmacc only matches elementwise macc blocks";
      return info;
    }
    if (loops.empty()) {
      info.why = "macc block has no loops";
      return info;
    }
    const Loop& li = loops.back();
    if (li.extent != variant.vl) {
      info.why = extent_err("inner", li.extent, variant.vl);
      return info;
    }
    if (mac.a.indices.back().coeff(li.id) != 1 ||
        mac.b.indices.back().coeff(li.id) != 1 ||
        mac.dst.indices.back().coeff(li.id) != 1) {
      info.why = "inner loop does not address the block with unit stride";
      return info;
    }
    info.consumed = {li.id};
  }
  info.mac = &mac;
  return info;
}

}  // namespace

bool match_block(const LoopNest& nest, const IntrinsicVariant& variant) {
  return match_info(nest, variant).mac != nullptr;
}

LoopNest tensorize_block(const LoopNest& nest,
                         const IntrinsicVariant& variant) {
  MatchInfo info = match_info(nest, variant);
  if (info.mac == nullptr)
    throw NoMatchError("cannot tensorize with " + variant.name() + ": " +
                       info.why);

  auto drop_consumed = [&](BufferAccess access) {
    for (auto& idx : access.indices)
      for (const auto& id : info.consumed) idx = idx.without(id);
    return access;
  };

  IntrinsicCallStmt call;
  call.kind = variant.kind;
  call.vl = variant.vl;
  call.j = variant.kind == IntrinsicKind::MultiVMul ? variant.j : 1;
  call.in_dtype = variant.in_dtype;
  call.acc_dtype = variant.acc_dtype;
  call.a = drop_consumed(info.mac->a);
  call.b = drop_consumed(info.mac->b);
  call.c = drop_consumed(info.mac->dst);

  LoopNest out = nest;
  out.body.loops.resize(out.body.loops.size() - info.consumed.size());
  out.body.stmts = {call};
  return out;
}

// ---- reference semantics ----------------------------------------------------

namespace {

template <class T>
double as_f64(T v) {
  if constexpr (std::is_same_v<T, f16_t>)
    return v.to_f32();
  else
    return static_cast<double>(v);
}

template <class T>
T from_f64(double v) {
  if constexpr (std::is_same_v<T, f16_t>)
    return f16_t::from_f32(static_cast<float>(v));
  else
    return static_cast<T>(v);
}

template <class T>
constexpr bool is_float_elem =
    std::is_same_v<T, float> || std::is_same_v<T, f16_t>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

}  // namespace

template <class In, class Acc>
std::vector<Acc> ref_multivmul(std::span<const In> a, std::span<const In> b,
                               std::span<const Acc> c,
                               const IntrinsicVariant& variant) {
  const auto vl = static_cast<std::size_t>(variant.vl);
  const auto j = static_cast<std::size_t>(variant.j);
  require(a.size() == vl, "ref_multivmul: A length does not match VL");
  require(c.size() == j, "ref_multivmul: C length does not match J");
  require(b.size() == vl * j, "ref_multivmul: B must be J x VL");

  std::vector<Acc> out(c.begin(), c.end());
  for (std::size_t row = 0; row < j; ++row) {
    if constexpr (is_float_elem<In>) {
      double sum = 0.0;
      for (std::size_t i = 0; i < vl; ++i)
        sum = detail::f32_add(
            sum, detail::f32_mul(as_f64(a[i]), as_f64(b[row * vl + i])));
      if constexpr (std::is_same_v<Acc, f16_t>)
        sum = as_f64(from_f64<f16_t>(sum));
      out[row] = from_f64<Acc>(detail::f32_add(as_f64(out[row]), sum));
    } else {
      std::int64_t sum = 0;
      for (std::size_t i = 0; i < vl; ++i)
        sum += static_cast<std::int64_t>(a[i]) *
               static_cast<std::int64_t>(b[row * vl + i]);
      out[row] = static_cast<Acc>(static_cast<std::int64_t>(out[row]) + sum);
    }
  }
  return out;
}

template <class In>
std::vector<In> ref_vmacc(std::span<const In> a, std::span<const In> b,
                          std::span<const In> c,
                          const IntrinsicVariant& variant) {
  const auto vl = static_cast<std::size_t>(variant.vl);
  require(a.size() == vl && b.size() == vl && c.size() == vl,
          "ref_vmacc: all operands must have length VL");
  std::vector<In> out(c.begin(), c.end());
  for (std::size_t i = 0; i < vl; ++i) {
    if constexpr (is_float_elem<In>) {
      out[i] = from_f64<In>(detail::f32_add(
          as_f64(out[i]), detail::f32_mul(as_f64(a[i]), as_f64(b[i]))));
    } else {
      out[i] = static_cast<In>(static_cast<std::int64_t>(out[i]) +
                               static_cast<std::int64_t>(a[i]) *
                                   static_cast<std::int64_t>(b[i]));
    }
  }
  return out;
}

// clang-format off
template std::vector<std::int32_t> ref_multivmul<std::int8_t, std::int32_t>(
    std::span<const std::int8_t>, std::span<const std::int8_t>,
    std::span<const std::int32_t>, const IntrinsicVariant&);
template std::vector<std::int32_t> ref_multivmul<std::int16_t, std::int32_t>(
    std::span<const std::int16_t>, std::span<const std::int16_t>,
    std::span<const std::int32_t>, const IntrinsicVariant&);
template std::vector<std::int32_t> ref_multivmul<std::int32_t, std::int32_t>(
    std::span<const std::int32_t>, std::span<const std::int32_t>,
    std::span<const std::int32_t>, const IntrinsicVariant&);
template std::vector<float> ref_multivmul<float, float>(
    std::span<const float>, std::span<const float>,
    std::span<const float>, const IntrinsicVariant&);
template std::vector<f16_t> ref_multivmul<f16_t, f16_t>(
    std::span<const f16_t>, std::span<const f16_t>,
    std::span<const f16_t>, const IntrinsicVariant&);

template std::vector<std::int8_t> ref_vmacc<std::int8_t>(
    std::span<const std::int8_t>, std::span<const std::int8_t>,
    std::span<const std::int8_t>, const IntrinsicVariant&);
template std::vector<std::int32_t> ref_vmacc<std::int32_t>(
    std::span<const std::int32_t>, std::span<const std::int32_t>,
    std::span<const std::int32_t>, const IntrinsicVariant&);
template std::vector<float> ref_vmacc<float>(
    std::span<const float>, std::span<const float>,
    std::span<const float>, const IntrinsicVariant&);
template std::vector<f16_t> ref_vmacc<f16_t>(
    std::span<const f16_t>, std::span<const f16_t>,
    std::span<const f16_t>, const IntrinsicVariant&);
// clang-format on

}  // namespace rvvtune
