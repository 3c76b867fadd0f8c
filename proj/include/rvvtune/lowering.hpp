// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "rvvtune/intrinsic.hpp"
#include "rvvtune/loop_nest.hpp"
#include "rvvtune/machine.hpp"
#include "rvvtune/program.hpp"

namespace rvvtune {

/// Lowers a (possibly tensorized) nest to an instruction program.
/// MultiVMul calls expand to the vle/vle/per-row{vmv, vle, widening vmul,
/// widening redsum, merge}/vadd/vse sequence (the slide stage disappears at
/// J=1); VMacc calls to 3x vle + vmacc + vse; scalar statements to scalar
/// micro-op sequences. vsetvl is emitted whenever the (sew, lmul, vl)
/// context changes. Throws LoweringError for unregistered variants.
Program lower_nest(const LoopNest& nest, const Registry& registry,
                   const MachineConfig& machine);

/// Fixed vectorized baseline modeling a hand-written library's store
/// pattern: each output element's reduction is vectorized (vle/vwmul/
/// vwredsum over the largest registered VL dividing k) but stored with its
/// own vse. MatMul only.
Program lower_rowstore(const LoopNest& nest, const Registry& registry,
                       const MachineConfig& machine);

}  // namespace rvvtune
