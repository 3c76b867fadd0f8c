// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "doctest.h"
#include "rvvtune/error.hpp"
#include "rvvtune/eval.hpp"
#include "rvvtune/loop_nest.hpp"
#include "rvvtune/tensor_op.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace rvvtune;
using testutil::from_bytes;
using testutil::to_bytes;

TEST_CASE("requantize matches the fixed-point definition") {
  RequantParams half{1 << 30, 0, 0};  // scale 0.5
  CHECK(requantize(100, half) == 50);
  CHECK(requantize(101, half) == 51);    // 50.5 rounds away from zero
  CHECK(requantize(-101, half) == -51);  // symmetric
  CHECK(requantize(1 << 20, half) == 127);
  CHECK(requantize(-(1 << 20), half) == -128);
  CHECK(requantize(3, RequantParams{1 << 30, 1, 5}) == 6);  // 0.75 -> 1, +5
  CHECK(requantize(0, RequantParams{1 << 30, 0, -7}) == -7);

  // float oracle over exact products (|acc| <= 2^20 keeps doubles exact)
  std::mt19937_64 rng(11);
  for (int t = 0; t < 2000; ++t) {
    RequantParams p;
    p.multiplier = static_cast<std::int32_t>(rng() % ((1u << 31) - 2)) + 1;
    p.shift = static_cast<int>(rng() % 20);
    p.zero_point = static_cast<int>(rng() % 255) - 128;
    const auto acc =
        static_cast<std::int32_t>(static_cast<std::int64_t>(rng() % (1 << 21)) -
                                  (1 << 20));
    CHECK(requantize(acc, p) ==
          oracles::requant_f64(acc, p.multiplier, p.shift, p.zero_point));
  }
}

TEST_CASE("requant parameter validation") {
  CHECK(RequantParams{1, 0, 0}.violations().empty());
  CHECK_FALSE(RequantParams{0, 0, 0}.violations().empty());
  CHECK_FALSE(RequantParams{1, 32, 0}.violations().empty());
  CHECK_FALSE(RequantParams{1, -1, 0}.violations().empty());
  CHECK_FALSE(RequantParams{1, 0, 200}.violations().empty());
}

TEST_CASE("tensor op spec invariants") {
  CHECK(TensorOpSpec::quantized_matmul(4, 4, 4).violations().empty());
  CHECK(TensorOpSpec::float_matmul(2, 3, 4).violations().empty());
  CHECK(TensorOpSpec::macc(8, DType::Float32).violations().empty());

  TensorOpSpec bad = TensorOpSpec::quantized_matmul(4, 4, 4);
  bad.requant.reset();
  CHECK_FALSE(bad.violations().empty());

  TensorOpSpec f = TensorOpSpec::float_matmul(4, 4, 4);
  f.requant = RequantParams{};
  CHECK_FALSE(f.violations().empty());

  TensorOpSpec macc = TensorOpSpec::macc(8, DType::Int8);
  CHECK(macc.violations().empty());
  macc.acc_dtype = DType::Int32;
  CHECK_FALSE(macc.violations().empty());  // in = acc = out for macc

  CHECK_THROWS_AS(build_macc_nest(TensorOpSpec::macc(0, DType::Float32)),
                  ValidationError);
  CHECK_THROWS_AS(build_matmul_nest(TensorOpSpec::float_matmul(0, 1, 1)),
                  ValidationError);
}

TEST_CASE("canonical int8 matmul nest shape") {
  const auto spec = TensorOpSpec::quantized_matmul(16, 16, 16);
  const LoopNest nest = build_matmul_nest(spec);

  REQUIRE(nest.body.loops.size() == 3);
  CHECK(nest.body.loops[0] == Loop{"m", 16});
  CHECK(nest.body.loops[1] == Loop{"n", 16});
  CHECK(nest.body.loops[2] == Loop{"k", 16});

  REQUIRE(nest.buffers.size() == 4);
  CHECK(nest.buffer("A").dtype == DType::Int8);
  CHECK(nest.buffer("A").shape == std::vector<std::int64_t>{16, 16});
  CHECK(nest.buffer("B").dtype == DType::Int8);
  CHECK(nest.buffer("D").dtype == DType::Int32);
  CHECK(nest.buffer("D").role == BufferRole::Accumulator);
  CHECK(nest.buffer("C").dtype == DType::Int8);
  CHECK(nest.buffer("C").role == BufferRole::Output);

  REQUIRE(nest.epilogue.has_value());
  REQUIRE(nest.epilogue->stmts.size() == 1);
  CHECK(std::holds_alternative<RequantStmt>(nest.epilogue->stmts[0]));
  CHECK(validate_nest(nest).empty());
}

TEST_CASE("1x1x1 float matmul evaluates to a*b + d") {
  const auto spec = TensorOpSpec::float_matmul(1, 1, 1);
  const LoopNest nest = build_matmul_nest(spec);
  BufferMap buffers = make_buffer_map(nest);
  buffers["A"] = to_bytes<float>({3.0f});
  buffers["B"] = to_bytes<float>({-2.0f});
  buffers["D"] = to_bytes<float>({10.0f});
  evaluate_nest(nest, buffers);
  CHECK(from_bytes<float>(buffers["C"])[0] == 4.0f);
}

TEST_CASE("2x3x4 float matmul matches the brute-force triple loop") {
  const auto spec = TensorOpSpec::float_matmul(2, 3, 4);
  const LoopNest nest = build_matmul_nest(spec);
  std::mt19937_64 rng(5);
  const auto a = testutil::random_f32(2 * 4, rng);
  const auto b = testutil::random_f32(3 * 4, rng);
  const auto d = testutil::random_f32(2 * 3, rng);
  BufferMap buffers = make_buffer_map(nest);
  buffers["A"] = to_bytes(a);
  buffers["B"] = to_bytes(b);
  buffers["D"] = to_bytes(d);
  evaluate_nest(nest, buffers);
  const auto got = from_bytes<float>(buffers["C"]);

  const auto want = oracles::matmul_f64(
      2, 3, 4, std::vector<double>(a.begin(), a.end()),
      std::vector<double>(b.begin(), b.end()),
      std::vector<double>(d.begin(), d.end()));
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-5));
}

TEST_CASE("quantized matmul evaluation matches the int64 oracle") {
  const RequantParams rq{1340316837, 6, -3};
  const auto spec = TensorOpSpec::quantized_matmul(5, 7, 9, rq);
  const LoopNest nest = build_matmul_nest(spec);
  std::mt19937_64 rng(17);
  const auto a = testutil::random_i8(5 * 9, rng);
  const auto b = testutil::random_i8(7 * 9, rng);
  const auto d = testutil::random_i32(5 * 7, rng);
  BufferMap buffers = make_buffer_map(nest);
  buffers["A"] = to_bytes(a);
  buffers["B"] = to_bytes(b);
  buffers["D"] = to_bytes(d);
  evaluate_nest(nest, buffers);
  const auto got = from_bytes<std::int8_t>(buffers["C"]);

  auto widen = [](const auto& v) {
    return std::vector<std::int64_t>(v.begin(), v.end());
  };
  const auto acc = oracles::matmul_i64(5, 7, 9, widen(a), widen(b), widen(d));
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(static_cast<std::int64_t>(got[i]) ==
          oracles::requant_f64(acc[i], rq.multiplier, rq.shift,
                               rq.zero_point));
  }
}

TEST_CASE("macc nest: ones stay ones, large case matches oracle") {
  {
    const auto spec = TensorOpSpec::macc(8, DType::Float32);
    const LoopNest nest = build_macc_nest(spec);
    BufferMap buffers = make_buffer_map(nest);
    buffers["A"] = to_bytes(std::vector<float>(8, 1.0f));
    buffers["B"] = to_bytes(std::vector<float>(8, 1.0f));
    buffers["C"] = to_bytes(std::vector<float>(8, 0.0f));
    evaluate_nest(nest, buffers);
    for (float v : from_bytes<float>(buffers["C"])) CHECK(v == 1.0f);
  }
  {
    const auto spec = TensorOpSpec::macc(1024, DType::Int32);
    const LoopNest nest = build_macc_nest(spec);
    std::mt19937_64 rng(23);
    const auto a = testutil::random_i32(1024, rng, -100, 100);
    const auto b = testutil::random_i32(1024, rng, -100, 100);
    const auto c = testutil::random_i32(1024, rng);
    BufferMap buffers = make_buffer_map(nest);
    buffers["A"] = to_bytes(a);
    buffers["B"] = to_bytes(b);
    buffers["C"] = to_bytes(c);
    evaluate_nest(nest, buffers);
    const auto got = from_bytes<std::int32_t>(buffers["C"]);
    auto widen = [](const auto& v) {
      return std::vector<std::int64_t>(v.begin(), v.end());
    };
    const auto want = oracles::macc_i64(widen(a), widen(b), widen(c));
    for (std::size_t i = 0; i < got.size(); ++i)
      CHECK(static_cast<std::int64_t>(got[i]) == want[i]);
  }
}

TEST_CASE("apply_schedule splits and preserves semantics") {
  const auto spec = TensorOpSpec::float_matmul(4, 4, 16);
  const LoopNest nest = build_matmul_nest(spec);

  ScheduleTrace trace = ScheduleTrace::identity(nest);
  trace.tile_factors["k"] = {4, 4};
  trace.loop_order = {"m", "n", "k0", "k1"};
  const LoopNest split = apply_schedule(nest, trace);
  REQUIRE(split.body.loops.size() == 4);
  CHECK(split.body.loops[2] == Loop{"k0", 4});
  CHECK(split.body.loops[3] == Loop{"k1", 4});
  CHECK(validate_nest(split).empty());

  std::mt19937_64 rng(9);
  BufferMap inputs = make_buffer_map(nest);
  inputs["A"] = to_bytes(testutil::random_f32(4 * 16, rng));
  inputs["B"] = to_bytes(testutil::random_f32(4 * 16, rng));
  inputs["D"] = to_bytes(testutil::random_f32(4 * 4, rng));

  BufferMap ref = inputs;
  evaluate_nest(nest, ref);
  BufferMap got = inputs;
  evaluate_nest(split, got);
  CHECK(relative_error(DType::Float32, got["C"], ref["C"]) <= 1e-4);
}

TEST_CASE("identity schedule reproduces the nest structurally") {
  const auto spec = TensorOpSpec::quantized_matmul(8, 8, 8);
  const LoopNest nest = build_matmul_nest(spec);
  const LoopNest same = apply_schedule(nest, ScheduleTrace::identity(nest));
  CHECK(same.body == nest.body);
}

TEST_CASE("schedule errors") {
  const auto spec = TensorOpSpec::float_matmul(4, 4, 16);
  const LoopNest nest = build_matmul_nest(spec);

  ScheduleTrace bad = ScheduleTrace::identity(nest);
  bad.tile_factors["k"] = {3, 4};
  bad.loop_order = {"m", "n", "k0", "k1"};
  CHECK_THROWS_WITH_AS(apply_schedule(nest, bad),
                       "split of loop 'k': factors 12 != extent 16",
                       ScheduleError);

  ScheduleTrace perm = ScheduleTrace::identity(nest);
  perm.loop_order = {"m", "n", "bogus"};
  CHECK_THROWS_AS(apply_schedule(nest, perm), ScheduleError);

  ScheduleTrace dup = ScheduleTrace::identity(nest);
  dup.loop_order = {"m", "n", "n"};
  CHECK_THROWS_AS(apply_schedule(nest, dup), ScheduleError);

  ScheduleTrace unknown = ScheduleTrace::identity(nest);
  unknown.tile_factors["zz"] = {1};
  CHECK_THROWS_AS(apply_schedule(nest, unknown), ScheduleError);
}

namespace {

// Independent random tiler: splits every loop into 1..3 perfect factors and
// shuffles the sub-loops. Deliberately not the tuner's sampler.
ScheduleTrace random_scalar_trace(const LoopNest& nest, std::mt19937_64& rng) {
  ScheduleTrace trace;
  std::vector<LoopId> ids;
  for (const auto& loop : nest.body.loops) {
    std::vector<std::int64_t> factors;
    std::int64_t rest = loop.extent;
    const int parts = 1 + static_cast<int>(rng() % 3);
    for (int p = 1; p < parts; ++p) {
      std::vector<std::int64_t> divs;
      for (std::int64_t d = 1; d <= rest; ++d)
        if (rest % d == 0) divs.push_back(d);
      const std::int64_t pick = divs[rng() % divs.size()];
      factors.push_back(pick);
      rest /= pick;
    }
    factors.push_back(rest);
    const auto sub = split_loop_ids(loop.id, factors.size());
    ids.insert(ids.end(), sub.begin(), sub.end());
    trace.tile_factors[loop.id] = factors;
  }
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[rng() % i]);
  trace.loop_order = ids;
  return trace;
}

}  // namespace

TEST_CASE("property: any scalar schedule preserves evaluation") {
  std::mt19937_64 rng(2026);
  for (int iter = 0; iter < 60; ++iter) {
    const std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 8);
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 8);
    const std::int64_t k = 1 + static_cast<std::int64_t>(rng() % 8);
    const bool quantized = (rng() & 1) != 0;
    const TensorOpSpec spec = quantized
                                  ? TensorOpSpec::quantized_matmul(m, n, k)
                                  : TensorOpSpec::float_matmul(m, n, k);
    const LoopNest nest = build_matmul_nest(spec);
    const ScheduleTrace trace = random_scalar_trace(nest, rng);
    const LoopNest scheduled = apply_schedule(nest, trace);

    // perfect tiling holds for every accepted trace
    for (const auto& loop : nest.body.loops) {
      std::int64_t product = 1;
      for (auto f : trace.tile_factors.at(loop.id)) product *= f;
      CHECK(product == loop.extent);
    }

    BufferMap inputs = make_workload_inputs(spec, iter);
    BufferMap ref = make_buffer_map(nest);
    for (const auto& [name, bytes] : inputs) ref[name] = bytes;
    BufferMap got = ref;
    evaluate_nest(nest, ref);
    evaluate_nest(scheduled, got);
    if (quantized) {
      CHECK(got["C"] == ref["C"]);
    } else {
      CHECK(relative_error(DType::Float32, got["C"], ref["C"]) <= 1e-4);
    }
  }
}

TEST_CASE("validate_nest flags broken nests") {
  const auto spec = TensorOpSpec::quantized_matmul(4, 4, 4);
  LoopNest nest = build_matmul_nest(spec);
  CHECK(validate_nest(nest).empty());

  // two intrinsic calls in one innermost block
  LoopNest twice = nest;
  IntrinsicCallStmt call;
  call.kind = IntrinsicKind::VMacc;
  call.vl = 4;
  call.in_dtype = DType::Int8;
  call.acc_dtype = DType::Int32;
  call.a = {"A", {AffineIndex::constant(0), AffineIndex::constant(0)}};
  call.b = {"B", {AffineIndex::constant(0), AffineIndex::constant(0)}};
  call.c = {"D", {AffineIndex::constant(0), AffineIndex::constant(0)}};
  twice.body.stmts = {call, call};
  const auto v2 = validate_nest(twice);
  REQUIRE(v2.size() == 1);
  CHECK(v2[0].find("at most one") != std::string::npos);

  // index referencing a loop that is not in scope
  LoopNest oob = nest;
  auto& mac = std::get<MacStmt>(oob.body.stmts[0]);
  mac.a.indices[0] = AffineIndex::var("phantom");
  const auto v3 = validate_nest(oob);
  REQUIRE(v3.size() == 1);
  CHECK(v3[0].find("affine function of loops in scope") != std::string::npos);

  // out-of-bounds constant offset
  LoopNest far = nest;
  auto& mac2 = std::get<MacStmt>(far.body.stmts[0]);
  mac2.b.indices[0].offset = 100;
  CHECK(validate_nest(far).size() == 1);
}

TEST_CASE("float16 storage round-trips and evaluates in float32") {
  CHECK(fp16_to_f32(f32_to_fp16(1.0f)) == 1.0f);
  CHECK(fp16_to_f32(f32_to_fp16(-2.5f)) == -2.5f);
  CHECK(fp16_to_f32(f32_to_fp16(0.0f)) == 0.0f);
  CHECK(fp16_to_f32(f32_to_fp16(65504.0f)) == 65504.0f);  // f16 max
  // every finite f16 value survives a round trip
  std::mt19937_64 rng(3);
  for (int t = 0; t < 2000; ++t) {
    const auto bits = static_cast<std::uint16_t>(rng());
    const float f = fp16_to_f32(bits);
    if (std::isnan(f)) continue;
    CHECK(fp16_to_f32(f32_to_fp16(f)) == f);
  }

  const auto spec = TensorOpSpec::float_matmul(2, 2, 2, DType::Float16);
  const LoopNest nest = build_matmul_nest(spec);
  BufferMap buffers = make_buffer_map(nest);
  auto h = [](float v) { return f16_t::from_f32(v); };
  buffers["A"] = to_bytes(std::vector<f16_t>{h(1), h(2), h(3), h(4)});
  buffers["B"] = to_bytes(std::vector<f16_t>{h(1), h(0), h(0), h(1)});
  buffers["D"] = to_bytes(std::vector<f16_t>{h(0), h(0), h(0), h(0)});
  evaluate_nest(nest, buffers);
  const auto c = from_bytes<f16_t>(buffers["C"]);
  CHECK(c[0].to_f32() == 1.0f);  // B row j is the j-th output column
  CHECK(c[1].to_f32() == 2.0f);
  CHECK(c[2].to_f32() == 3.0f);
  CHECK(c[3].to_f32() == 4.0f);
}
