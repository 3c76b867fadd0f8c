// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/dtype.hpp"

#include <bit>
#include <cstring>

#include "rvvtune/error.hpp"

namespace rvvtune {

std::string dtype_name(DType t) {
  switch (t) {
    case DType::Int8: return "int8";
    case DType::Int16: return "int16";
    case DType::Int32: return "int32";
    case DType::Float16: return "float16";
    case DType::Float32: return "float32";
  }
  return "?";
}

DType parse_dtype(const std::string& name) {
  if (name == "int8") return DType::Int8;
  if (name == "int16") return DType::Int16;
  if (name == "int32") return DType::Int32;
  if (name == "float16") return DType::Float16;
  if (name == "float32") return DType::Float32;
  throw ValidationError("unknown dtype '" + name +
                        "' (expected int8, int16, int32, float16, float32)");
}

float fp16_to_f32(std::uint16_t bits) {
  const std::uint32_t sign = (bits & 0x8000u) << 16;
  const std::uint32_t exp = (bits >> 10) & 0x1Fu;
  const std::uint32_t mant = bits & 0x3FFu;
  std::uint32_t out;
  if (exp == 0) {
    if (mant == 0) {
      out = sign;  // +-0
    } else {
      // subnormal: normalize
      int e = -1;
      std::uint32_t m = mant;
      do {
        ++e;
        m <<= 1;
      } while ((m & 0x400u) == 0);
      out = sign | ((127 - 15 - e) << 23) | ((m & 0x3FFu) << 13);
    }
  } else if (exp == 0x1F) {
    out = sign | 0x7F800000u | (mant << 13);  // inf / nan
  } else {
    out = sign | ((exp - 15 + 127) << 23) | (mant << 13);
  }
  return std::bit_cast<float>(out);
}

std::uint16_t f32_to_fp16(float value) {
  const std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  const std::uint16_t sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000u);
  const std::int32_t exp = static_cast<std::int32_t>((bits >> 23) & 0xFFu) - 127;
  std::uint32_t mant = bits & 0x7FFFFFu;

  if (exp == 128) {  // inf / nan
    return static_cast<std::uint16_t>(sign | 0x7C00u | (mant ? 0x200u : 0u) |
                                      (mant >> 13));
  }
  if (exp > 15) {  // overflow -> inf
    return static_cast<std::uint16_t>(sign | 0x7C00u);
  }
  if (exp >= -14) {  // normal range
    std::uint32_t out = static_cast<std::uint32_t>(exp + 15) << 10 | mant >> 13;
    // round to nearest even on the 13 dropped bits
    const std::uint32_t rem = mant & 0x1FFFu;
    if (rem > 0x1000u || (rem == 0x1000u && (out & 1u))) ++out;
    return static_cast<std::uint16_t>(sign | out);
  }
  if (exp >= -25) {  // subnormal
    mant |= 0x800000u;
    const int shift = -exp - 1;  // 14..24
    std::uint32_t out = mant >> shift;
    const std::uint32_t rem = mant & ((1u << shift) - 1);
    const std::uint32_t half = 1u << (shift - 1);
    if (rem > half || (rem == half && (out & 1u))) ++out;
    return static_cast<std::uint16_t>(sign | out);
  }
  return sign;  // underflow -> +-0
}

}  // namespace rvvtune
