#pragma once

// Run configuration: strict JSON schema, canonical form and content hash,
// dotted-path command-line overrides.
//
// {
//   "converter":  { "per_unit": {L, C, r_l, R, V_s} | "si": {...},
//                   "bases": {V_base, Z_base, omega_base} },   // bases required with "si"
//   "controller": { alpha, beta, Q, vref_pu, fs_hz },
//   "sim":        { steps, x0?, z0?, events?, noise_amplitude?, seed?, band?, tail_fraction? },
//   "output":     { csv_path?, summary_path? }                // optional
// }

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "switchstate/controller.hpp"
#include "switchstate/errors.hpp"
#include "switchstate/plant.hpp"
#include "switchstate/simulator.hpp"

namespace switchstate {

using json = nlohmann::json;

struct ControllerConfig {
  double alpha = 0.0;
  double beta = 0.0;
  Matrix Q;
  double vref_pu = 0.0;
  double fs_hz = 0.0;
};

struct SimConfig {
  std::size_t steps = 0;
  Vector x0 = Vector::Zero(2);
  int z0 = 0;
  std::vector<Event> events;
  double noise_amplitude = 0.0;
  std::uint64_t seed = 1;
  double band = kSettlingBand;
  double tail_fraction = kTailFraction;
};

struct OutputConfig {
  std::string csv_path = "trace.csv";
  std::string summary_path = "summary.json";
};

struct RunConfig {
  ConverterParams converter;  // as given: SI or per-unit
  PerUnitBases bases = reference_bases();
  bool bases_given = false;
  ControllerConfig controller;
  SimConfig sim;
  OutputConfig output;

  ConverterParams per_unit() const {
    return converter.units == UnitSystem::PerUnit ? converter : to_per_unit(converter, bases);
  }
};

namespace detail {

inline std::string join_path(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (auto a : allowed) known = known || it.key() == a;
    if (!known) throw ConfigError(join_path(path, it.key()), "unknown key");
  }
}

inline const json& require_object(const json& parent, const std::string& path, std::string_view key) {
  const std::string p = join_path(path, key);
  if (!parent.contains(key)) throw ConfigError(p, "required field missing");
  const json& v = parent.at(std::string(key));
  if (!v.is_object()) throw ConfigError(p, "must be an object");
  return v;
}

inline double number_at(const json& v, const std::string& p) {
  if (!v.is_number()) throw ConfigError(p, "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(p, "must be finite");
  return d;
}

inline double require_number(const json& obj, const std::string& path, std::string_view key) {
  const std::string p = join_path(path, key);
  if (!obj.contains(key)) throw ConfigError(p, "required field missing");
  return number_at(obj.at(std::string(key)), p);
}

inline double optional_number(const json& obj, const std::string& path, std::string_view key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return number_at(obj.at(std::string(key)), join_path(path, key));
}

inline std::uint64_t integer_at(const json& v, const std::string& p) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(p, "must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline Vector vector_at(const json& v, const std::string& p, Eigen::Index n) {
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != n) {
    throw ConfigError(p, "must be an array of " + std::to_string(n) + " numbers");
  }
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = number_at(v[static_cast<std::size_t>(i)], p + "[" + std::to_string(i) + "]");
  return out;
}

inline ConverterParams parse_params(const json& obj, const std::string& path, UnitSystem units) {
  reject_unknown(obj, path, {"L", "C", "r_l", "R", "V_s"});
  ConverterParams p{require_number(obj, path, "L"), require_number(obj, path, "C"), require_number(obj, path, "r_l"),
                    require_number(obj, path, "R"), require_number(obj, path, "V_s"), units};
  try {
    validate(p);
  } catch (const ParameterError& e) {
    throw ConfigError(path, e.what());
  }
  return p;
}

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace detail

inline json to_json(const Matrix& m) { return detail::matrix_json(m); }
inline json to_json(const Vector& v) { return detail::vector_json(v); }

inline RunConfig parse_config(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw ConfigError("", "configuration must be a JSON object");
  {
    std::string missing;
    for (const char* key : {"converter", "controller", "sim"}) {
      if (!doc.contains(key)) missing += missing.empty() ? key : std::string(", ") + key;
    }
    if (!missing.empty()) throw ConfigError("", "required fields missing: " + missing);
  }
  reject_unknown(doc, "", {"converter", "controller", "sim", "output"});
  RunConfig cfg;

  const json& conv = require_object(doc, "", "converter");
  reject_unknown(conv, "converter", {"per_unit", "si", "bases"});
  const bool has_pu = conv.contains("per_unit");
  const bool has_si = conv.contains("si");
  if (has_pu == has_si) {
    throw ConfigError("converter", "exactly one of 'per_unit' or 'si' parameter blocks is required");
  }
  if (conv.contains("bases")) {
    const json& b = require_object(conv, "converter", "bases");
    reject_unknown(b, "converter.bases", {"V_base", "Z_base", "omega_base"});
    cfg.bases = {require_number(b, "converter.bases", "V_base"), require_number(b, "converter.bases", "Z_base"),
                 require_number(b, "converter.bases", "omega_base")};
    if (!(cfg.bases.V_base > 0 && cfg.bases.Z_base > 0 && cfg.bases.omega_base > 0)) {
      throw ConfigError("converter.bases", "all bases must be positive");
    }
    cfg.bases_given = true;
  } else if (has_si) {
    throw ConfigError("converter.bases", "required with SI parameters");
  }
  cfg.converter = has_pu ? parse_params(require_object(conv, "converter", "per_unit"), "converter.per_unit",
                                        UnitSystem::PerUnit)
                         : parse_params(require_object(conv, "converter", "si"), "converter.si", UnitSystem::SI);

  const json& ctl = require_object(doc, "", "controller");
  reject_unknown(ctl, "controller", {"alpha", "beta", "Q", "vref_pu", "fs_hz"});
  cfg.controller.alpha = require_number(ctl, "controller", "alpha");
  cfg.controller.beta = require_number(ctl, "controller", "beta");
  cfg.controller.vref_pu = require_number(ctl, "controller", "vref_pu");
  cfg.controller.fs_hz = require_number(ctl, "controller", "fs_hz");
  if (!(cfg.controller.alpha > 0.0 && cfg.controller.alpha < 1.0)) throw ConfigError("controller.alpha", "must lie in (0, 1)");
  if (!(cfg.controller.beta >= 0.0)) throw ConfigError("controller.beta", "must be non-negative");
  if (!(cfg.controller.fs_hz > 0.0)) throw ConfigError("controller.fs_hz", "must be positive");
  if (!ctl.contains("Q")) throw ConfigError("controller.Q", "required field missing");
  {
    const json& q = ctl.at("Q");
    if (!q.is_array() || q.size() != 2) throw ConfigError("controller.Q", "must be a 2x2 array");
    cfg.controller.Q.resize(2, 2);
    for (std::size_t i = 0; i < 2; ++i) {
      const Vector row = vector_at(q[i], "controller.Q[" + std::to_string(i) + "]", 2);
      cfg.controller.Q.row(static_cast<Eigen::Index>(i)) = row.transpose();
    }
  }

  const json& sim = require_object(doc, "", "sim");
  reject_unknown(sim, "sim", {"steps", "x0", "z0", "events", "noise_amplitude", "seed", "band", "tail_fraction"});
  if (!sim.contains("steps")) throw ConfigError("sim.steps", "required field missing");
  cfg.sim.steps = static_cast<std::size_t>(integer_at(sim.at("steps"), "sim.steps"));
  if (sim.contains("x0")) cfg.sim.x0 = vector_at(sim.at("x0"), "sim.x0", 2);
  if (sim.contains("z0")) {
    const auto z0 = integer_at(sim.at("z0"), "sim.z0");
    if (z0 > 1) throw ConfigError("sim.z0", "must be 0 or 1");
    cfg.sim.z0 = static_cast<int>(z0);
  }
  if (sim.contains("events")) {
    const json& evs = sim.at("events");
    if (!evs.is_array()) throw ConfigError("sim.events", "must be an array");
    for (std::size_t i = 0; i < evs.size(); ++i) {
      const std::string p = "sim.events[" + std::to_string(i) + "]";
      if (!evs[i].is_object()) throw ConfigError(p, "must be an object");
      reject_unknown(evs[i], p, {"at_step", "load_scale"});
      if (!evs[i].contains("at_step")) throw ConfigError(p + ".at_step", "required field missing");
      Event e{static_cast<std::size_t>(integer_at(evs[i].at("at_step"), p + ".at_step")),
              {require_number(evs[i], p, "load_scale")}};
      if (!(e.load.factor > 0.0)) throw ConfigError(p + ".load_scale", "must be positive");
      if (e.at_step >= cfg.sim.steps) throw ConfigError(p + ".at_step", "must be below sim.steps");
      if (!cfg.sim.events.empty() && e.at_step < cfg.sim.events.back().at_step) {
        throw ConfigError(p + ".at_step", "events must be sorted by step");
      }
      cfg.sim.events.push_back(e);
    }
  }
  cfg.sim.noise_amplitude = optional_number(sim, "sim", "noise_amplitude", 0.0);
  if (!(cfg.sim.noise_amplitude >= 0.0)) throw ConfigError("sim.noise_amplitude", "must be non-negative");
  if (sim.contains("seed")) cfg.sim.seed = integer_at(sim.at("seed"), "sim.seed");
  cfg.sim.band = optional_number(sim, "sim", "band", kSettlingBand);
  if (!(cfg.sim.band > 0.0)) throw ConfigError("sim.band", "must be positive");
  cfg.sim.tail_fraction = optional_number(sim, "sim", "tail_fraction", kTailFraction);
  if (!(cfg.sim.tail_fraction > 0.0 && cfg.sim.tail_fraction <= 1.0)) {
    throw ConfigError("sim.tail_fraction", "must lie in (0, 1]");
  }

  if (doc.contains("output")) {
    const json& out = require_object(doc, "", "output");
    reject_unknown(out, "output", {"csv_path", "summary_path"});
    for (const char* key : {"csv_path", "summary_path"}) {
      if (!out.contains(key)) continue;
      if (!out.at(key).is_string()) throw ConfigError(std::string("output.") + key, "must be a string");
    }
    cfg.output.csv_path = out.value("csv_path", cfg.output.csv_path);
    cfg.output.summary_path = out.value("summary_path", cfg.output.summary_path);
  }
  return cfg;
}

inline RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

// Normalized document with every default filled in.
inline json to_json(const RunConfig& cfg) {
  using detail::matrix_json;
  using detail::vector_json;
  const ConverterParams& p = cfg.converter;
  json params = {{"L", p.L}, {"C", p.C}, {"r_l", p.r_l}, {"R", p.R}, {"V_s", p.V_s}};
  json conv;
  conv[p.units == UnitSystem::PerUnit ? "per_unit" : "si"] = params;
  if (cfg.bases_given || p.units == UnitSystem::SI) {
    conv["bases"] = {{"V_base", cfg.bases.V_base}, {"Z_base", cfg.bases.Z_base}, {"omega_base", cfg.bases.omega_base}};
  }
  json events = json::array();
  for (const Event& e : cfg.sim.events) events.push_back({{"at_step", e.at_step}, {"load_scale", e.load.factor}});
  return {
      {"converter", conv},
      {"controller",
       {{"alpha", cfg.controller.alpha},
        {"beta", cfg.controller.beta},
        {"Q", matrix_json(cfg.controller.Q)},
        {"vref_pu", cfg.controller.vref_pu},
        {"fs_hz", cfg.controller.fs_hz}}},
      {"sim",
       {{"steps", cfg.sim.steps},
        {"x0", vector_json(cfg.sim.x0)},
        {"z0", cfg.sim.z0},
        {"events", events},
        {"noise_amplitude", cfg.sim.noise_amplitude},
        {"seed", cfg.sim.seed},
        {"band", cfg.sim.band},
        {"tail_fraction", cfg.sim.tail_fraction}}},
      {"output", {{"csv_path", cfg.output.csv_path}, {"summary_path", cfg.output.summary_path}}},
  };
}

// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Keys sorted, no whitespace, shortest round-trip numbers.
inline std::string canonical_text(const RunConfig& cfg) { return to_json(cfg).dump(); }

inline std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(canonical_text(cfg)); }

// Applies `a.b.c=value` assignments. The value is parsed as JSON when
// possible and taken as a string otherwise; missing objects are created.
inline void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(ov, "override must look like key.path=value");
    const std::string path = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = raw;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (key.empty()) throw ConfigError(path, "empty path component in override");
      if (!node->is_object()) throw ConfigError(path, "override descends into a non-object");
      if (dot == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      node = &(*node)[key];
      if (node->is_null()) *node = json::object();
      start = dot + 1;
    }
  }
}

}  // namespace switchstate
