// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rvvtune/dtype.hpp"
#include "rvvtune/tensor_op.hpp"

namespace rvvtune {

using LoopId = std::string;

/// index = offset + sum(coeff * loop_var). Affine by construction; the
/// validator additionally checks that every referenced loop is in scope.
struct AffineIndex {
  std::vector<std::pair<LoopId, std::int64_t>> terms;
  std::int64_t offset = 0;

  static AffineIndex var(const LoopId& id) { return {{{id, 1}}, 0}; }
  static AffineIndex constant(std::int64_t c) { return {{}, c}; }

  /// Coefficient of `id`, 0 if absent.
  std::int64_t coeff(const LoopId& id) const;
  /// Drops the `id` term (used when a loop is consumed by tensorization).
  AffineIndex without(const LoopId& id) const;

  bool operator==(const AffineIndex&) const = default;
};

enum class BufferRole : std::uint8_t { Input, Output, Accumulator };

struct Buffer {
  std::string name;
  std::vector<std::int64_t> shape;
  DType dtype = DType::Float32;
  BufferRole role = BufferRole::Input;

  std::int64_t elem_count() const;
  std::int64_t byte_size() const { return elem_count() * elem_bytes(dtype); }
};

struct BufferAccess {
  std::string buffer;
  std::vector<AffineIndex> indices;  // one per buffer dimension

  bool operator==(const BufferAccess&) const = default;
};

struct Loop {
  LoopId id;
  std::int64_t extent = 1;

  bool operator==(const Loop&) const = default;
};

// ---- statements --------------------------------------------------------

/// dst += widen(a) * widen(b), arithmetic in dst's dtype.
struct MacStmt {
  BufferAccess dst, a, b;

  bool operator==(const MacStmt&) const = default;
};

/// dst = requantize(src) (int32 accumulator -> int8 output).
struct RequantStmt {
  BufferAccess dst, src;
  RequantParams params;

  bool operator==(const RequantStmt&) const = default;
};

/// dst = src (same dtype).
struct CopyStmt {
  BufferAccess dst, src;

  bool operator==(const CopyStmt&) const = default;
};

enum class IntrinsicKind : std::uint8_t { MultiVMul, VMacc };

std::string intrinsic_kind_name(IntrinsicKind k);

/// A tensorized innermost block. Accesses are to the first element the
/// intrinsic touches, affine in the remaining (outer) loops; the intrinsic
/// then reads contiguous runs from there (B advances by whole rows).
struct IntrinsicCallStmt {
  IntrinsicKind kind = IntrinsicKind::MultiVMul;
  std::int64_t vl = 0;
  std::int64_t j = 1;  // MultiVMul output rows; 1 for VMacc
  DType in_dtype = DType::Float32;
  DType acc_dtype = DType::Float32;
  BufferAccess a, b, c;

  bool operator==(const IntrinsicCallStmt&) const = default;
};

using Stmt = std::variant<MacStmt, RequantStmt, CopyStmt, IntrinsicCallStmt>;

/// A perfectly nested band of loops with a flat innermost statement list.
struct StmtBlock {
  std::vector<Loop> loops;  // outer -> inner
  std::vector<Stmt> stmts;

  bool operator==(const StmtBlock&) const = default;
};

/// Schedulable loop-nest IR for one tensor op. `body.loops` is the
/// schedulable band; the epilogue (requantization or accumulator
/// materialization) keeps its canonical loops.
struct LoopNest {
  TensorOpSpec spec;
  std::vector<Buffer> buffers;
  StmtBlock body;
  std::optional<StmtBlock> epilogue;

  const Buffer& buffer(const std::string& name) const;
  bool has_buffer(const std::string& name) const;
  /// The buffer whose contents are the op's result (Output role, or the
  /// in-place Accumulator when no Output buffer exists).
  const Buffer& output_buffer() const;
};

// ---- construction -------------------------------------------------------

/// Canonical (m, n, k) nest accumulating A x B into D (which arrives
/// holding the bias addend), plus a scalar epilogue materializing C:
/// requantization for quantized specs, a plain copy otherwise.
LoopNest build_matmul_nest(const TensorOpSpec& spec);

/// Single loop over n computing C[i] += A[i] * B[i] in place.
LoopNest build_macc_nest(const TensorOpSpec& spec);

/// Empty iff all LoopNest invariants hold; never throws.
std::vector<std::string> validate_nest(const LoopNest& nest);

// ---- scheduling ---------------------------------------------------------

struct VariantKey {
  IntrinsicKind kind = IntrinsicKind::MultiVMul;
  DType in_dtype = DType::Float32;
  std::int64_t vl = 0;
  std::int64_t j = 1;

  auto operator<=>(const VariantKey&) const = default;
  std::string str() const;
};

/// One sampled schedule: per-loop split factors, sub-loop order, the chosen
/// intrinsic (or none = scalar), and the raw decision stream that produced
/// it (replaying the stream reconstructs the trace bit-for-bit).
struct ScheduleTrace {
  std::map<LoopId, std::vector<std::int64_t>> tile_factors;
  std::vector<LoopId> loop_order;
  std::optional<VariantKey> variant;
  std::vector<std::uint64_t> seed_decisions;

  bool operator==(const ScheduleTrace&) const = default;

  static ScheduleTrace identity(const LoopNest& nest);

  /// Canonical serialization; also the deterministic tie-break key.
  std::string str() const;
};

/// Sub-loop ids produced by splitting `id` into `parts` factors:
/// ["k"] for one factor, ["k0","k1",...] otherwise.
std::vector<LoopId> split_loop_ids(const LoopId& id, std::size_t parts);

/// Splits and reorders the body band. Factor lists must multiply to the
/// original extents and loop_order must be a permutation of the generated
/// sub-loops; reduction loops may be reordered freely (accumulation is
/// associative under the op's accumulator dtype).
LoopNest apply_schedule(const LoopNest& nest, const ScheduleTrace& trace);

}  // namespace rvvtune
