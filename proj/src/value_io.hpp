// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

// Internal typed access into raw buffer bytes. Integer values travel as
// int64 (sign-extended, truncated on store); floats travel as double but
// every arithmetic step is rounded to float32 so the interpreter and the
// emulator agree bit for bit.

#pragma once

#include <cstdint>
#include <cstring>

#include "rvvtune/dtype.hpp"

namespace rvvtune::detail {

inline std::int64_t load_int(DType t, const std::uint8_t* p) {
  switch (t) {
    case DType::Int8: {
      std::int8_t v;
      std::memcpy(&v, p, 1);
      return v;
    }
    case DType::Int16: {
      std::int16_t v;
      std::memcpy(&v, p, 2);
      return v;
    }
    case DType::Int32: {
      std::int32_t v;
      std::memcpy(&v, p, 4);
      return v;
    }
    default: return 0;
  }
}

inline void store_int(DType t, std::uint8_t* p, std::int64_t v) {
  switch (t) {
    case DType::Int8: {
      auto x = static_cast<std::int8_t>(v);
      std::memcpy(p, &x, 1);
      break;
    }
    case DType::Int16: {
      auto x = static_cast<std::int16_t>(v);
      std::memcpy(p, &x, 2);
      break;
    }
    case DType::Int32: {
      auto x = static_cast<std::int32_t>(v);
      std::memcpy(p, &x, 4);
      break;
    }
    default: break;
  }
}

inline double load_float(DType t, const std::uint8_t* p) {
  if (t == DType::Float32) {
    float v;
    std::memcpy(&v, p, 4);
    return v;
  }
  std::uint16_t bits;
  std::memcpy(&bits, p, 2);
  return fp16_to_f32(bits);
}

inline void store_float(DType t, std::uint8_t* p, double v) {
  if (t == DType::Float32) {
    float x = static_cast<float>(v);
    std::memcpy(p, &x, 4);
  } else {
    std::uint16_t bits = f32_to_fp16(static_cast<float>(v));
    std::memcpy(p, &bits, 2);
  }
}

/// One float32-rounded arithmetic step.
inline double f32_mul(double a, double b) {
  return static_cast<float>(a * b);
}
inline double f32_add(double a, double b) {
  return static_cast<float>(a + b);
}

}  // namespace rvvtune::detail
