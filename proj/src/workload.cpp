// Copyright 2026 the rvvtune authors
// SPDX-License-Identifier: Apache-2.0

#include "rvvtune/workload.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rvvtune/error.hpp"

namespace rvvtune {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& path, const std::string& msg) {
  throw ValidationError(path + ": " + msg);
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      bad(path + "." + it.key(), "unknown key");
  }
}

std::int64_t get_int(const json& obj, const std::string& path,
                     const std::string& key) {
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    bad(path + "." + key, "expected an integer");
  return v.get<std::int64_t>();
}

std::int64_t get_int_or(const json& obj, const std::string& path,
                        const std::string& key, std::int64_t fallback) {
  if (!obj.contains(key)) return fallback;
  return get_int(obj, path, key);
}

RequantParams parse_requant(const json& obj, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  reject_unknown_keys(obj, path, {"multiplier", "shift", "zero_point"});
  RequantParams rq;
  rq.multiplier =
      static_cast<std::int32_t>(get_int_or(obj, path, "multiplier", rq.multiplier));
  rq.shift = static_cast<int>(get_int_or(obj, path, "shift", rq.shift));
  rq.zero_point =
      static_cast<int>(get_int_or(obj, path, "zero_point", rq.zero_point));
  for (const auto& v : rq.violations()) bad(path, v);
  return rq;
}

TensorOpSpec parse_op(const json& obj, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  reject_unknown_keys(obj, path, {"kind", "m", "n", "k", "dtype", "requant"});
  if (!obj.contains("kind")) bad(path + ".kind", "missing");
  const std::string kind = obj.at("kind").get<std::string>();
  if (!obj.contains("dtype")) bad(path + ".dtype", "missing");
  const std::string dtype_str = obj.at("dtype").get<std::string>();
  if (dtype_str != "int8" && dtype_str != "float16" && dtype_str != "float32")
    bad(path + ".dtype", "must be one of int8, float16, float32");
  const DType dtype = parse_dtype(dtype_str);

  TensorOpSpec spec;
  if (kind == "matmul") {
    const std::int64_t m = get_int(obj, path, "m");
    const std::int64_t n = get_int(obj, path, "n");
    const std::int64_t k = get_int(obj, path, "k");
    if (m < 1) bad(path + ".m", "extents must be >= 1");
    if (n < 1) bad(path + ".n", "extents must be >= 1");
    if (k < 1) bad(path + ".k", "extents must be >= 1");
    if (dtype == DType::Int8) {
      RequantParams rq;  // defaults unless overridden
      if (obj.contains("requant"))
        rq = parse_requant(obj.at("requant"), path + ".requant");
      spec = TensorOpSpec::quantized_matmul(m, n, k, rq);
    } else {
      if (obj.contains("requant"))
        bad(path + ".requant", "only int8 matmuls are requantized");
      spec = TensorOpSpec::float_matmul(m, n, k, dtype);
    }
  } else if (kind == "macc") {
    const std::int64_t n = get_int(obj, path, "n");
    if (n < 1) bad(path + ".n", "extents must be >= 1");
    if (obj.contains("requant"))
      bad(path + ".requant", "macc ops are not requantized");
    // m and k are accepted but meaningless for macc
    spec = TensorOpSpec::macc(n, dtype);
  } else {
    bad(path + ".kind", "must be 'matmul' or 'macc'");
  }
  for (const auto& v : spec.violations()) bad(path, v);
  return spec;
}

MachineConfig parse_machine(const json& obj, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  reject_unknown_keys(obj, path, {"vlen", "dlen", "scalar_cycle", "cost"});
  if (!obj.contains("vlen")) bad(path + ".vlen", "missing");
  const std::int64_t vlen = get_int(obj, path, "vlen");
  const bool pow2 = vlen > 0 && (vlen & (vlen - 1)) == 0;
  if (!pow2 || vlen < 128)
    bad(path + ".vlen", "vlen must be a power of two >= 128");

  MachineConfig machine;
  machine.vlen = vlen;
  machine.dlen = get_int_or(obj, path, "dlen", vlen / 2);
  machine.scalar_cycle = static_cast<std::uint32_t>(
      get_int_or(obj, path, "scalar_cycle", machine.scalar_cycle));
  if (obj.contains("cost")) {
    const json& cost = obj.at("cost");
    if (!cost.is_object()) bad(path + ".cost", "expected an object");
    const std::set<std::string> classes = {"load",        "store",
                                           "reduction",   "elementwise",
                                           "configuration", "other"};
    reject_unknown_keys(cost, path + ".cost", classes);
    auto apply = [&](const std::string& name, Category cat) {
      if (!cost.contains(name)) return;
      const json& entry = cost.at(name);
      const std::string epath = path + ".cost." + name;
      reject_unknown_keys(entry, epath, {"issue", "per_chunk"});
      CostEntry& e = machine.cost(cat);
      e.issue_cycles = static_cast<std::uint32_t>(
          get_int_or(entry, epath, "issue", e.issue_cycles));
      e.per_chunk_cycles = static_cast<std::uint32_t>(
          get_int_or(entry, epath, "per_chunk", e.per_chunk_cycles));
    };
    apply("load", Category::Load);
    apply("store", Category::Store);
    apply("reduction", Category::Reduction);
    apply("elementwise", Category::MulAdd);
    apply("configuration", Category::Configuration);
    apply("other", Category::Others);
  }
  try {
    machine.ensure_valid();
  } catch (const ConfigError& e) {
    bad(path, e.what());
  }
  return machine;
}

TunerConfig parse_tuner(const json& obj, const std::string& path) {
  if (!obj.is_object()) bad(path, "expected an object");
  reject_unknown_keys(
      obj, path, {"trials", "seed", "population", "mutation_rate", "min_per_op"});
  TunerConfig cfg;
  cfg.trials = get_int_or(obj, path, "trials", cfg.trials);
  cfg.seed = static_cast<std::uint64_t>(
      get_int_or(obj, path, "seed", static_cast<std::int64_t>(cfg.seed)));
  cfg.population = get_int_or(obj, path, "population", cfg.population);
  cfg.min_per_op = get_int_or(obj, path, "min_per_op", cfg.min_per_op);
  if (obj.contains("mutation_rate")) {
    const json& v = obj.at("mutation_rate");
    if (!v.is_number()) bad(path + ".mutation_rate", "expected a number");
    cfg.mutation_rate = v.get<double>();
  }
  cfg.population = std::min(cfg.population, cfg.trials);
  try {
    cfg.ensure_valid();
  } catch (const ConfigError& e) {
    bad(path, e.what());
  }
  return cfg;
}

}  // namespace

WorkloadDescriptor parse_workload_text(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("workload is not valid JSON: ") +
                          e.what());
  }
  if (!doc.is_object()) bad("$", "expected a JSON object");
  reject_unknown_keys(doc, "$", {"name", "ops", "machine", "tuner"});

  WorkloadDescriptor out;
  out.graph.name = doc.contains("name") ? doc.at("name").get<std::string>()
                                        : std::string("workload");
  if (!doc.contains("ops") || !doc.at("ops").is_array() ||
      doc.at("ops").empty())
    bad("$.ops", "must be a non-empty array");
  for (std::size_t i = 0; i < doc.at("ops").size(); ++i)
    out.graph.ops.push_back(
        parse_op(doc.at("ops")[i], "$.ops[" + std::to_string(i) + "]"));

  if (!doc.contains("machine")) bad("$.machine", "missing");
  out.machine = parse_machine(doc.at("machine"), "$.machine");
  out.tuner = doc.contains("tuner") ? parse_tuner(doc.at("tuner"), "$.tuner")
                                    : TunerConfig{};
  return out;
}

WorkloadDescriptor parse_workload(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open workload file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_workload_text(ss.str());
}

void apply_overrides(WorkloadDescriptor& desc, const DescriptorOverrides& ov) {
  if (ov.seed.has_value()) desc.tuner.seed = *ov.seed;
  if (ov.trials.has_value()) {
    desc.tuner.trials = *ov.trials;
    desc.tuner.population = std::min(desc.tuner.population, desc.tuner.trials);
  }
  if (ov.vlen.has_value()) {
    desc.machine.vlen = *ov.vlen;
    if (!ov.dlen.has_value()) desc.machine.dlen = *ov.vlen / 2;
  }
  if (ov.dlen.has_value()) desc.machine.dlen = *ov.dlen;
  desc.machine.ensure_valid();
  desc.tuner.ensure_valid();
}

// ---- schedule persistence ---------------------------------------------------

namespace {

json trace_to_json_obj(const ScheduleTrace& trace) {
  json tiles = json::object();
  for (const auto& [id, factors] : trace.tile_factors) tiles[id] = factors;
  json obj;
  obj["tile_factors"] = tiles;
  obj["loop_order"] = trace.loop_order;
  if (trace.variant.has_value()) {
    obj["variant"] = {
        {"kind", intrinsic_kind_name(trace.variant->kind)},
        {"dtype", dtype_name(trace.variant->in_dtype)},
        {"vl", trace.variant->vl},
        {"j", trace.variant->j},
    };
  } else {
    obj["variant"] = nullptr;
  }
  obj["seed_decisions"] = trace.seed_decisions;
  return obj;
}

ScheduleTrace trace_from_json_obj(const json& obj, const std::string& path) {
  reject_unknown_keys(obj, path,
                      {"tile_factors", "loop_order", "variant",
                       "seed_decisions"});
  ScheduleTrace trace;
  for (auto it = obj.at("tile_factors").begin();
       it != obj.at("tile_factors").end(); ++it)
    trace.tile_factors[it.key()] = it.value().get<std::vector<std::int64_t>>();
  trace.loop_order = obj.at("loop_order").get<std::vector<LoopId>>();
  if (obj.contains("variant") && !obj.at("variant").is_null()) {
    const json& v = obj.at("variant");
    reject_unknown_keys(v, path + ".variant", {"kind", "dtype", "vl", "j"});
    VariantKey key;
    const std::string kind = v.at("kind").get<std::string>();
    if (kind == "multivmul")
      key.kind = IntrinsicKind::MultiVMul;
    else if (kind == "vmacc")
      key.kind = IntrinsicKind::VMacc;
    else
      bad(path + ".variant.kind", "must be 'multivmul' or 'vmacc'");
    key.in_dtype = parse_dtype(v.at("dtype").get<std::string>());
    key.vl = v.at("vl").get<std::int64_t>();
    key.j = v.at("j").get<std::int64_t>();
    trace.variant = key;
  }
  if (obj.contains("seed_decisions"))
    trace.seed_decisions =
        obj.at("seed_decisions").get<std::vector<std::uint64_t>>();
  return trace;
}

}  // namespace

std::string schedule_to_json(const SavedSchedule& sched) {
  json ops = json::array();
  for (const auto& [fp, trace] : sched.ops)
    ops.push_back({{"op", fp}, {"trace", trace_to_json_obj(trace)}});
  json doc;
  doc["workload"] = sched.workload;
  doc["ops"] = ops;
  return doc.dump(2) + "\n";
}

SavedSchedule schedule_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("schedule is not valid JSON: ") +
                          e.what());
  }
  reject_unknown_keys(doc, "$", {"workload", "ops"});
  SavedSchedule out;
  out.workload = doc.at("workload").get<std::string>();
  const json& ops = doc.at("ops");
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const std::string path = "$.ops[" + std::to_string(i) + "]";
    reject_unknown_keys(ops[i], path, {"op", "trace"});
    out.ops.emplace_back(
        ops[i].at("op").get<std::string>(),
        trace_from_json_obj(ops[i].at("trace"), path + ".trace"));
  }
  return out;
}

SavedSchedule load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schedule file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return schedule_from_json(ss.str());
}

void save_schedule(const SavedSchedule& sched, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schedule file '" + path + "'");
  out << schedule_to_json(sched);
}

}  // namespace rvvtune
