// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace rvvtune {

/// Element datatypes supported by the workloads and the vector unit model.
/// The element width (SEW) is a fixed property of the type, so the
/// "width matches kind" invariant holds by construction.
enum class DType : std::uint8_t {
  Int8,
  Int16,
  Int32,
  Float16,
  Float32,
};

constexpr int sew_bits(DType t) {
  switch (t) {
    case DType::Int8: return 8;
    case DType::Int16: return 16;
    case DType::Int32: return 32;
    case DType::Float16: return 16;
    case DType::Float32: return 32;
  }
  return 0;
}

constexpr int elem_bytes(DType t) { return sew_bits(t) / 8; }

constexpr bool is_float(DType t) {
  return t == DType::Float16 || t == DType::Float32;
}

constexpr bool is_integer(DType t) { return !is_float(t); }

std::string dtype_name(DType t);

/// Parses "int8", "int16", "int32", "float16", "float32". Throws
/// ValidationError on anything else.
DType parse_dtype(const std::string& name);

/// IEEE binary16 <-> binary32 conversion. Float16 tensors are stored as
/// 16-bit payloads and computed in float32; these are the storage hooks.
float fp16_to_f32(std::uint16_t bits);
std::uint16_t f32_to_fp16(float value);  // round to nearest even

/// Strongly typed float16 payload (used where element types are template
/// parameters).
struct f16_t {
  std::uint16_t bits = 0;

  static f16_t from_f32(float v) { return {f32_to_fp16(v)}; }
  float to_f32() const { return fp16_to_f32(bits); }
  bool operator==(const f16_t&) const = default;
};

}  // namespace rvvtune
