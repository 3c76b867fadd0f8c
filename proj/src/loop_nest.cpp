// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/loop_nest.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "rvvtune/error.hpp"

namespace rvvtune {

std::int64_t AffineIndex::coeff(const LoopId& id) const {
  for (const auto& [lid, c] : terms)
    if (lid == id) return c;
  return 0;
}

AffineIndex AffineIndex::without(const LoopId& id) const {
  AffineIndex out;
  out.offset = offset;
  for (const auto& t : terms)
    if (t.first != id) out.terms.push_back(t);
  return out;
}

std::int64_t Buffer::elem_count() const {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string intrinsic_kind_name(IntrinsicKind k) {
  return k == IntrinsicKind::MultiVMul ? "multivmul" : "vmacc";
}

const Buffer& LoopNest::buffer(const std::string& name) const {
  for (const auto& b : buffers)
    if (b.name == name) return b;
  throw ValidationError("nest has no buffer named '" + name + "'");
}

bool LoopNest::has_buffer(const std::string& name) const {
  for (const auto& b : buffers)
    if (b.name == name) return true;
  return false;
}

const Buffer& LoopNest::output_buffer() const {
  for (const auto& b : buffers)
    if (b.role == BufferRole::Output) return b;
  for (const auto& b : buffers)
    if (b.role == BufferRole::Accumulator) return b;
  throw ValidationError("nest has no output or accumulator buffer");
}

// ---- construction ---------------------------------------------------------

LoopNest build_matmul_nest(const TensorOpSpec& spec) {
  if (spec.kind != OpKind::MatMul)
    throw ValidationError("build_matmul_nest requires a matmul spec");
  spec.ensure_valid();

  LoopNest nest;
  nest.spec = spec;
  // B is stored [n, k] (weight layout): its per-output-row loads are then
  // contiguous along the reduction axis.
  nest.buffers = {
      {"A", {spec.m, spec.k}, spec.in_dtype, BufferRole::Input},
      {"B", {spec.n, spec.k}, spec.in_dtype, BufferRole::Input},
      {"D", {spec.m, spec.n}, spec.acc_dtype, BufferRole::Accumulator},
      {"C", {spec.m, spec.n}, spec.out_dtype, BufferRole::Output},
  };

  nest.body.loops = {{"m", spec.m}, {"n", spec.n}, {"k", spec.k}};
  MacStmt mac;
  mac.dst = {"D", {AffineIndex::var("m"), AffineIndex::var("n")}};
  mac.a = {"A", {AffineIndex::var("m"), AffineIndex::var("k")}};
  mac.b = {"B", {AffineIndex::var("n"), AffineIndex::var("k")}};
  nest.body.stmts = {mac};

  StmtBlock epi;
  epi.loops = {{"em", spec.m}, {"en", spec.n}};
  BufferAccess dst{"C", {AffineIndex::var("em"), AffineIndex::var("en")}};
  BufferAccess src{"D", {AffineIndex::var("em"), AffineIndex::var("en")}};
  if (spec.requant.has_value()) {
    epi.stmts = {RequantStmt{dst, src, *spec.requant}};
  } else {
    epi.stmts = {CopyStmt{dst, src}};
  }
  nest.epilogue = std::move(epi);
  return nest;
}

LoopNest build_macc_nest(const TensorOpSpec& spec) {
  if (spec.kind != OpKind::Macc)
    throw ValidationError("build_macc_nest requires a macc spec");
  spec.ensure_valid();

  LoopNest nest;
  nest.spec = spec;
  nest.buffers = {
      {"A", {spec.n}, spec.in_dtype, BufferRole::Input},
      {"B", {spec.n}, spec.in_dtype, BufferRole::Input},
      // in place: C is both the addend source and the result
      {"C", {spec.n}, spec.acc_dtype, BufferRole::Accumulator},
  };
  nest.body.loops = {{"i", spec.n}};
  MacStmt mac;
  mac.dst = {"C", {AffineIndex::var("i")}};
  mac.a = {"A", {AffineIndex::var("i")}};
  mac.b = {"B", {AffineIndex::var("i")}};
  nest.body.stmts = {mac};
  return nest;
}

// ---- validation -------------------------------------------------------------

namespace {

void check_access(const LoopNest& nest, const StmtBlock& block,
                  const BufferAccess& access, const char* where,
                  std::vector<std::string>& out) {
  if (!nest.has_buffer(access.buffer)) {
    out.push_back(std::string(where) + ": unknown buffer '" + access.buffer +
                  "'");
    return;
  }
  const Buffer& buf = nest.buffer(access.buffer);
  if (access.indices.size() != buf.shape.size()) {
    std::ostringstream os;
    os << where << ": access to '" << access.buffer << "' has "
       << access.indices.size() << " indices, buffer has " << buf.shape.size()
       << " dims";
    out.push_back(os.str());
    return;
  }
  for (std::size_t d = 0; d < access.indices.size(); ++d) {
    const AffineIndex& idx = access.indices[d];
    std::int64_t lo = idx.offset, hi = idx.offset;
    for (const auto& [term_id, c] : idx.terms) {
      const LoopId& id = term_id;
      auto it = std::find_if(block.loops.begin(), block.loops.end(),
                             [&](const Loop& l) { return l.id == id; });
      if (it == block.loops.end()) {
        out.push_back(std::string(where) + ": index of '" + access.buffer +
                      "' is not an affine function of loops in scope (uses '" +
                      id + "')");
        return;
      }
      if (c >= 0)
        hi += c * (it->extent - 1);
      else
        lo += c * (it->extent - 1);
    }
    if (lo < 0 || hi >= buf.shape[d]) {
      std::ostringstream os;
      os << where << ": access to '" << access.buffer << "' dim " << d
         << " spans [" << lo << ", " << hi << "] outside extent "
         << buf.shape[d];
      out.push_back(os.str());
    }
  }
}

void check_block(const LoopNest& nest, const StmtBlock& block,
                 const char* where, std::vector<std::string>& out) {
  std::set<LoopId> seen;
  for (const auto& loop : block.loops) {
    if (loop.extent < 1) {
      std::ostringstream os;
      os << where << ": loop '" << loop.id << "' has extent " << loop.extent;
      out.push_back(os.str());
    }
    if (!seen.insert(loop.id).second)
      out.push_back(std::string(where) + ": duplicate loop id '" + loop.id +
                    "'");
  }
  int intrinsic_calls = 0;
  for (const auto& stmt : block.stmts) {
    if (std::holds_alternative<MacStmt>(stmt)) {
      const auto& s = std::get<MacStmt>(stmt);
      check_access(nest, block, s.dst, where, out);
      check_access(nest, block, s.a, where, out);
      check_access(nest, block, s.b, where, out);
    } else if (std::holds_alternative<RequantStmt>(stmt)) {
      const auto& s = std::get<RequantStmt>(stmt);
      check_access(nest, block, s.dst, where, out);
      check_access(nest, block, s.src, where, out);
    } else if (std::holds_alternative<CopyStmt>(stmt)) {
      const auto& s = std::get<CopyStmt>(stmt);
      check_access(nest, block, s.dst, where, out);
      check_access(nest, block, s.src, where, out);
    } else {
      const auto& s = std::get<IntrinsicCallStmt>(stmt);
      ++intrinsic_calls;
      check_access(nest, block, s.a, where, out);
      check_access(nest, block, s.b, where, out);
      check_access(nest, block, s.c, where, out);
    }
  }
  if (intrinsic_calls > 1) {
    std::ostringstream os;
    os << where << ": " << intrinsic_calls
       << " intrinsic calls in one innermost block (at most one allowed)";
    out.push_back(os.str());
  }
}

}  // namespace

std::vector<std::string> validate_nest(const LoopNest& nest) {
  std::vector<std::string> out;
  check_block(nest, nest.body, "body", out);
  if (nest.epilogue.has_value())
    check_block(nest, *nest.epilogue, "epilogue", out);
  return out;
}

// ---- scheduling -------------------------------------------------------------

std::string VariantKey::str() const {
  std::ostringstream os;
  os << intrinsic_kind_name(kind) << "_" << dtype_name(in_dtype) << "_vl" << vl;
  if (kind == IntrinsicKind::MultiVMul) os << "_j" << j;
  return os.str();
}

std::vector<LoopId> split_loop_ids(const LoopId& id, std::size_t parts) {
  if (parts == 1) return {id};
  std::vector<LoopId> out;
  for (std::size_t i = 0; i < parts; ++i)
    out.push_back(id + std::to_string(i));
  return out;
}

ScheduleTrace ScheduleTrace::identity(const LoopNest& nest) {
  ScheduleTrace t;
  for (const auto& loop : nest.body.loops) {
    t.tile_factors[loop.id] = {loop.extent};
    t.loop_order.push_back(loop.id);
  }
  return t;
}

std::string ScheduleTrace::str() const {
  std::ostringstream os;
  os << "tiles{";
  bool first = true;
  for (const auto& [id, factors] : tile_factors) {
    if (!first) os << ";";
    first = false;
    os << id << "=";
    for (std::size_t i = 0; i < factors.size(); ++i)
      os << (i ? "x" : "") << factors[i];
  }
  os << "} order[";
  for (std::size_t i = 0; i < loop_order.size(); ++i)
    os << (i ? "," : "") << loop_order[i];
  os << "] variant=" << (variant ? variant->str() : "scalar");
  return os.str();
}

LoopNest apply_schedule(const LoopNest& nest, const ScheduleTrace& trace) {
  // Factor lists must cover exactly the body loops.
  for (const auto& [split_id, factors] : trace.tile_factors) {
    const LoopId& id = split_id;
    bool known = std::any_of(nest.body.loops.begin(), nest.body.loops.end(),
                             [&](const Loop& l) { return l.id == id; });
    if (!known)
      throw ScheduleError("schedule splits unknown loop '" + id + "'");
  }

  struct SplitInfo {
    std::vector<LoopId> ids;
    std::vector<std::int64_t> strides;  // per sub-loop, in original iterations
  };
  std::map<LoopId, SplitInfo> splits;
  std::vector<Loop> sub_loops;

  for (const auto& loop : nest.body.loops) {
    auto it = trace.tile_factors.find(loop.id);
    if (it == trace.tile_factors.end())
      throw ScheduleError("schedule is missing factors for loop '" + loop.id +
                          "'");
    const auto& factors = it->second;
    if (factors.empty())
      throw ScheduleError("empty factor list for loop '" + loop.id + "'");
    std::int64_t product = 1;
    for (auto f : factors) {
      if (f < 1)
        throw ScheduleError("non-positive factor for loop '" + loop.id + "'");
      product *= f;
    }
    if (product != loop.extent) {
      std::ostringstream os;
      os << "split of loop '" << loop.id << "': factors " << product
         << " != extent " << loop.extent;
      throw ScheduleError(os.str());
    }
    SplitInfo info;
    info.ids = split_loop_ids(loop.id, factors.size());
    info.strides.resize(factors.size());
    std::int64_t stride = 1;
    for (std::size_t i = factors.size(); i-- > 0;) {
      info.strides[i] = stride;
      stride *= factors[i];
    }
    for (std::size_t i = 0; i < factors.size(); ++i)
      sub_loops.push_back({info.ids[i], factors[i]});
    splits[loop.id] = std::move(info);
  }

  // loop_order must be a permutation of the generated sub-loops.
  if (trace.loop_order.size() != sub_loops.size())
    throw ScheduleError("loop order lists " +
                        std::to_string(trace.loop_order.size()) +
                        " loops, schedule produced " +
                        std::to_string(sub_loops.size()));
  std::vector<Loop> ordered;
  std::set<LoopId> used;
  for (const auto& id : trace.loop_order) {
    auto it = std::find_if(sub_loops.begin(), sub_loops.end(),
                           [&](const Loop& l) { return l.id == id; });
    if (it == sub_loops.end() || !used.insert(id).second)
      throw ScheduleError("loop order is not a permutation of sub-loops ('" +
                          id + "')");
    ordered.push_back(*it);
  }
  // Reordering is always legal here: m/n (and the macc i loop) are parallel
  // and the k reduction commutes under the accumulator dtype.

  auto rewrite = [&](const AffineIndex& idx) {
    AffineIndex out;
    out.offset = idx.offset;
    for (const auto& [id, c] : idx.terms) {
      auto it = splits.find(id);
      if (it == splits.end()) {
        out.terms.emplace_back(id, c);
        continue;
      }
      const SplitInfo& info = it->second;
      for (std::size_t i = 0; i < info.ids.size(); ++i)
        out.terms.emplace_back(info.ids[i], c * info.strides[i]);
    }
    return out;
  };
  auto rewrite_access = [&](BufferAccess access) {
    for (auto& idx : access.indices) idx = rewrite(idx);
    return access;
  };

  LoopNest result = nest;
  result.body.loops = std::move(ordered);
  for (auto& stmt : result.body.stmts) {
    if (std::holds_alternative<MacStmt>(stmt)) {
      auto& s = std::get<MacStmt>(stmt);
      s.dst = rewrite_access(s.dst);
      s.a = rewrite_access(s.a);
      s.b = rewrite_access(s.b);
    } else if (std::holds_alternative<RequantStmt>(stmt)) {
      auto& s = std::get<RequantStmt>(stmt);
      s.dst = rewrite_access(s.dst);
      s.src = rewrite_access(s.src);
    } else if (std::holds_alternative<CopyStmt>(stmt)) {
      auto& s = std::get<CopyStmt>(stmt);
      s.dst = rewrite_access(s.dst);
      s.src = rewrite_access(s.src);
    } else {
      throw ScheduleError("cannot re-schedule an already tensorized nest");
    }
  }
  return result;
}

}  // namespace rvvtune
