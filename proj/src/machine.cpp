// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/machine.hpp"

#include <bit>
#include <sstream>

#include "rvvtune/error.hpp"

namespace rvvtune {

std::string category_name(Category c) {
  switch (c) {
    case Category::Load: return "load";
    case Category::Store: return "store";
    case Category::Reduction: return "reduction";
    case Category::MulAdd: return "elementwise";
    case Category::Configuration: return "configuration";
    case Category::Others: return "other";
  }
  return "?";
}

MachineConfig MachineConfig::make(std::int64_t vlen,
                                  std::optional<std::int64_t> dlen) {
  MachineConfig m;
  m.vlen = vlen;
  m.dlen = dlen.value_or(vlen / 2);
  m.ensure_valid();
  return m;
}

void MachineConfig::ensure_valid() const {
  auto pow2 = [](std::int64_t v) {
    return v > 0 && std::has_single_bit(static_cast<std::uint64_t>(v));
  };
  if (!pow2(vlen) || vlen < 128) {
    std::ostringstream os;
    os << "vlen must be a power of two >= 128, got " << vlen;
    throw ConfigError(os.str());
  }
  if (vlen > 2048) {
    std::ostringstream os;
    os << "vlen must be <= 2048, got " << vlen;
    throw ConfigError(os.str());
  }
  if (!pow2(dlen) || dlen > vlen) {
    std::ostringstream os;
    os << "dlen must be a power of two <= vlen, got " << dlen;
    throw ConfigError(os.str());
  }
  if (scalar_cycle == 0) throw ConfigError("scalar_cycle must be >= 1");
}

std::int64_t vlmax(std::int64_t vlen_bits, int sew, int lmul) {
  const bool vlen_ok = vlen_bits == 128 || vlen_bits == 256 ||
                       vlen_bits == 512 || vlen_bits == 1024 ||
                       vlen_bits == 2048;
  const bool sew_ok = sew == 8 || sew == 16 || sew == 32;
  const bool lmul_ok = lmul == 1 || lmul == 2 || lmul == 4 || lmul == 8;
  if (!vlen_ok || !sew_ok || !lmul_ok) {
    std::ostringstream os;
    os << "unsupported vlmax arguments: vlen=" << vlen_bits << " sew=" << sew
       << " lmul=" << lmul
       << " (vlen in {128,256,512,1024,2048}, sew in {8,16,32}, lmul in "
          "{1,2,4,8})";
    throw ConfigError(os.str());
  }
  return vlen_bits * lmul / sew;
}

}  // namespace rvvtune
