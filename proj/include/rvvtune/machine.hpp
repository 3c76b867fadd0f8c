// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "rvvtune/dtype.hpp"

namespace rvvtune {

/// Trace categories, matching the instruction-group breakdown used in the
/// reports (MulAdd is reported as the "elementwise" column).
enum class Category : std::uint8_t {
  Load = 0,
  Store,
  Reduction,
  MulAdd,
  Configuration,
  Others,
};

constexpr std::size_t kNumCategories = 6;

std::string category_name(Category c);

struct CostEntry {
  std::uint32_t issue_cycles = 2;
  std::uint32_t per_chunk_cycles = 1;
};

/// Emulated machine parameters. Cost of a vector instruction:
///
///   cycles = issue + ceil(elements * sew / DLEN) * per_chunk
///            (+ ceil(log2(max(vl,1))) for reductions)
///
/// where `elements` is the element count the instruction actually
/// processes (0 for vsetvl). Scalar instructions cost `scalar_cycle`.
struct MachineConfig {
  std::int64_t vlen = 1024;  // bits per vector register
  std::int64_t dlen = 512;   // datapath bits per cycle
  std::array<CostEntry, kNumCategories> cost_table{};
  std::uint32_t scalar_cycle = 1;

  static MachineConfig make(std::int64_t vlen,
                            std::optional<std::int64_t> dlen = std::nullopt);

  const CostEntry& cost(Category c) const {
    return cost_table[static_cast<std::size_t>(c)];
  }
  CostEntry& cost(Category c) {
    return cost_table[static_cast<std::size_t>(c)];
  }

  /// Throws ConfigError unless VLEN is a supported power of two >= 128 and
  /// DLEN is a power of two <= VLEN.
  void ensure_valid() const;
};

/// VLMAX in elements for a (VLEN, SEW, LMUL) configuration:
/// vlen * lmul / sew. Throws ConfigError on unsupported arguments
/// (vlen in {128,256,512,1024,2048}, sew in {8,16,32}, lmul in {1,2,4,8}).
std::int64_t vlmax(std::int64_t vlen_bits, int sew, int lmul);

}  // namespace rvvtune
