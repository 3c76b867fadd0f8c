// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rvvtune/dtype.hpp"

namespace rvvtune {

/// Fixed-point requantization parameters: int32 accumulator -> int8 output.
///
///   out = sat_i8( round_half_away( (acc * multiplier) >> (31 + shift) )
///                 + zero_point )
///
/// with the multiply performed in 64 bits.
struct RequantParams {
  std::int32_t multiplier = 1073741824;  // 0.5 in Q31
  int shift = 8;
  int zero_point = 0;

  std::vector<std::string> violations() const;
  bool operator==(const RequantParams&) const = default;
};

/// Applies the requantization scheme above to one accumulator value.
std::int8_t requantize(std::int32_t acc, const RequantParams& p);

enum class OpKind : std::uint8_t { MatMul, Macc };

std::string op_kind_name(OpKind k);

/// Declarative description of one workload op.
///
/// MatMul: C[m,n] = requant_or_copy( A[m,k] x B + D[m,n] ), with the B
/// operand stored row-major as [n,k] (weight layout; rows are contiguous
/// along the reduction axis so intrinsic loads stay unit-stride).
/// Macc:   C[i] += A[i] * B[i] over n elements, in place on C.
struct TensorOpSpec {
  OpKind kind = OpKind::MatMul;
  std::int64_t m = 1;
  std::int64_t n = 1;
  std::int64_t k = 1;  // unused for Macc
  DType in_dtype = DType::Float32;
  DType acc_dtype = DType::Float32;
  DType out_dtype = DType::Float32;
  std::optional<RequantParams> requant;

  static TensorOpSpec quantized_matmul(std::int64_t m, std::int64_t n,
                                       std::int64_t k,
                                       const RequantParams& rq = {});
  static TensorOpSpec float_matmul(std::int64_t m, std::int64_t n,
                                   std::int64_t k,
                                   DType dtype = DType::Float32);
  static TensorOpSpec macc(std::int64_t n, DType dtype);

  /// Empty iff the op description is well formed (dtype combinations,
  /// extents, requant presence rules).
  std::vector<std::string> violations() const;

  /// Throws ValidationError listing every violation.
  void ensure_valid() const;

  /// Stable identifier used in filenames and reports,
  /// e.g. "matmul_m64n64k64_int8" or "macc_n1024_float32".
  std::string fingerprint() const;
};

/// An ordered list of independently tunable ops.
struct WorkloadGraph {
  std::string name;
  std::vector<TensorOpSpec> ops;

  void ensure_valid() const;
};

}  // namespace rvvtune
