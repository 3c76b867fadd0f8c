// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace rvvtune {

/// Command-line driver. Subcommands: tune, eval, trace, codegen, registry.
/// Returns 0 on success, 1 on usage/validation errors, 2 on internal errors.
int run_cli(int argc, const char* const* argv);

}  // namespace rvvtune
