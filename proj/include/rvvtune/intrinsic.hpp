// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rvvtune/dtype.hpp"
#include "rvvtune/error.hpp"
#include "rvvtune/loop_nest.hpp"
#include "rvvtune/machine.hpp"

namespace rvvtune {

/// One registered tensor intrinsic version. MultiVMul computes J dot
/// products of length VL with a widening multiply + reduction; VMacc is an
/// elementwise multiply-accumulate over VL elements.
struct IntrinsicVariant {
  IntrinsicKind kind = IntrinsicKind::MultiVMul;
  DType in_dtype = DType::Float32;
  DType acc_dtype = DType::Float32;
  std::int64_t vl = 0;
  std::int64_t j = 1;      // output rows; 1 for VMacc
  int src_lmul = 8;        // effective LMUL of source operand groups
  int widen_factor = 1;    // 1, 2, or 4: dest width / source width

  VariantKey key() const { return {kind, in_dtype, vl, j}; }
  std::string name() const;
};

/// Widening/LMUL policy per input dtype. Narrow integers load their
/// sources at LMUL=4 so the widened products fit a legal LMUL=8 group;
/// everything else runs at LMUL=8 with no widening.
struct DtypePath {
  DType acc_dtype;
  int src_lmul;
  int widen_factor;
};
DtypePath dtype_path(DType in_dtype);

/// All VL-halved variants for one machine and input dtype: VL from the
/// dtype path's VLMAX down to 4 (halving), MultiVMul with J in {VLEN/32, 1},
/// VMacc with no J. Ordered largest VL first, larger J first.
std::vector<IntrinsicVariant> enumerate_variants(const MachineConfig& machine,
                                                 DType in_dtype);

/// Immutable variant table keyed by (kind, in_dtype, VL, J).
class Registry {
 public:
  static Registry build(const MachineConfig& machine,
                        std::span<const DType> in_dtypes);
  static Registry build(const MachineConfig& machine,
                        std::initializer_list<DType> in_dtypes);

  const std::vector<IntrinsicVariant>& variants() const { return variants_; }
  const MachineConfig& machine() const { return machine_; }

  /// nullptr when the key is not registered.
  const IntrinsicVariant* find(const VariantKey& key) const;

 private:
  Registry() = default;
  std::vector<IntrinsicVariant> variants_;
  MachineConfig machine_;
};

/// True iff the (fully scalar) innermost block of `nest` matches the
/// variant's definition exactly: op kind, dtypes, and extents (VL, and J
/// for MultiVMul), with unit-stride innermost access.
bool match_block(const LoopNest& nest, const IntrinsicVariant& variant);

/// Replaces the matched innermost block with a single IntrinsicCall node;
/// outer loops are untouched. Throws NoMatchError when match_block is
/// false, with the mismatch spelled out.
LoopNest tensorize_block(const LoopNest& nest, const IntrinsicVariant& variant);

// ---- reference semantics -------------------------------------------------
//
// The mathematical contract of the two intrinsics, independent of the
// register-level lowering the emulator executes. `In`/`Acc` follow the
// variant's dtype signature; float16 payloads use std::uint16_t with
// arithmetic in float32.

/// C'[r] = C[r] + sum_i A[i] * B[r*VL + i], products widened, accumulation
/// in Acc. Shapes: A[VL], B[J*VL] row-major, C[J].
template <class In, class Acc>
std::vector<Acc> ref_multivmul(std::span<const In> a, std::span<const In> b,
                               std::span<const Acc> c,
                               const IntrinsicVariant& variant);

/// C'[i] = C[i] + A[i] * B[i], all lengths VL.
template <class In>
std::vector<In> ref_vmacc(std::span<const In> a, std::span<const In> b,
                          std::span<const In> c,
                          const IntrinsicVariant& variant);

}  // namespace rvvtune
