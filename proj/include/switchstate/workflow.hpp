#pragma once

// End-to-end runs driven by a RunConfig: controller synthesis, scenario
// presets for the reference buck converter, beta sweeps, oracle comparison,
// and the JSON documents the CLI writes.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "switchstate/config.hpp"
#include "switchstate/controller.hpp"
#include "switchstate/oracle.hpp"
#include "switchstate/plant.hpp"
#include "switchstate/simulator.hpp"

namespace switchstate {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Byte-for-byte copy of presets/reference.json; a test pins both to the same
// content hash.
inline constexpr std::string_view kReferenceJson = R"({
  "converter": {
    "per_unit": { "L": 27.9, "C": 497, "r_l": 0.17, "R": 1, "V_s": 1 },
    "bases": { "V_base": 20, "Z_base": 9, "omega_base": 251327.41228718346 }
  },
  "controller": {
    "alpha": 0.9999,
    "beta": 10,
    "Q": [[1, 0], [0, 0]],
    "vref_pu": 0.4,
    "fs_hz": 20000
  },
  "sim": {
    "steps": 1600,
    "x0": [0, 0],
    "z0": 0,
    "events": [],
    "noise_amplitude": 0,
    "seed": 1
  },
  "output": { "csv_path": "trace.csv", "summary_path": "summary.json" }
}
)";

struct RunOptions {
  SignConvention sign = SignConvention::Physical;
};

inline ProblemSpec problem_from(const RunConfig& cfg, RunOptions opts = {}) {
  SystemModel model = discretize_plant(cfg.per_unit(), cfg.controller.fs_hz, cfg.bases.omega_base, opts.sign);
  Vector h(2);
  h << 1.0, 0.0;
  const RegulationTargets targets = regulation_targets(h, cfg.controller.vref_pu);
  return make_problem(std::move(model), cfg.controller.Q, targets.r, cfg.controller.alpha, cfg.controller.beta,
                      {.allow_degenerate = cfg.controller.beta == 0.0});
}

inline Scenario scenario_from(const RunConfig& cfg) {
  return {cfg.sim.steps, cfg.sim.x0, to_switch(cfg.sim.z0), cfg.sim.events, cfg.sim.noise_amplitude, cfg.sim.seed};
}

inline json gains_json(const Gains& g) {
  return {{"P", to_json(g.V.P)},
          {"theta", to_json(g.V.theta)},
          {"v", g.V.v},
          {"delta", to_json(g.policy.delta)},
          {"zeta", g.policy.zeta},
          {"delta_printed", to_json(g.literal.delta)},
          {"zeta_printed", g.literal.zeta},
          {"bellman_residual_max", g.bellman_residual_max}};
}

inline json metrics_json(const Metrics& m) {
  return {{"settling_time", m.settling_time ? json(*m.settling_time) : json(nullptr)},
          {"overshoot_fraction", m.overshoot_fraction},
          {"ripple_pp", m.ripple_pp},
          {"switch_count", m.switch_count},
          {"mean_switching_frequency", m.mean_switching_frequency},
          {"J_truncated", m.J_truncated},
          {"J_tail_bound", m.J_tail_bound}};
}

// The two places where the as-printed model and coefficients disagree with a
// consistent derivation, evaluated on this configuration.
inline json discrepancy_report(const RunConfig& cfg, const Gains& g) {
  json out;
  const ConverterParams pu = cfg.per_unit();
  {
    json lit;
    // A_c with +1/L in the (2,1) slot.
    const double tr = -1.0 / (pu.R * pu.C) - pu.r_l / pu.L;
    const double det = (pu.r_l / (pu.R * pu.C * pu.L)) - 1.0 / (pu.L * pu.C);
    lit["trace"] = tr;
    lit["det"] = det;
    try {
      build_continuous(pu, SignConvention::AsPrinted);
      lit["stable"] = true;
    } catch (const StabilityError& e) {
      lit["stable"] = false;
      lit["error"] = e.what();
    }
    out["printed_model_sign"] = lit;
  }
  out["printed_policy_coefficients"] = {{"delta", to_json(g.literal.delta)},
                                      {"zeta", g.literal.zeta},
                                      {"max_abs_deviation_from_f", g.literal_max_deviation},
                                      {"agrees_with_f", g.literal_max_deviation < 1e-10}};
  return out;
}

inline json synth_report(const RunConfig& cfg, RunOptions opts = {}) {
  const ProblemSpec spec = problem_from(cfg, opts);
  const Gains g = synthesize_gains(spec);
  json out = gains_json(g);
  out["discrepancies"] = discrepancy_report(cfg, g);
  out["config_hash"] = config_hash(cfg);
  return out;
}

struct RunOutcome {
  RunConfig config;
  Trace trace;
  Gains gains;
  std::optional<Metrics> metrics;
  json summary;
};

inline RunOutcome run_config(const RunConfig& cfg, RunOptions opts = {}, std::string_view preset = {}) {
  const ProblemSpec spec = problem_from(cfg, opts);
  RunOutcome out{cfg, {}, synthesize_gains(spec), std::nullopt, {}};
  out.trace = run(spec.model, out.gains.policy, spec, scenario_from(cfg));
  out.trace.config_hash = config_hash(cfg);

  json& s = out.summary;
  s["tool_version"] = kToolVersion;
  s["config_hash"] = out.trace.config_hash;
  s["seed"] = cfg.sim.seed;
  s["generator"] = out.trace.generator;
  if (!preset.empty()) s["preset"] = preset;
  s["gains"] = gains_json(out.gains);
  s["plant"] = {{"A", to_json(spec.model.A)},
                {"b", to_json(spec.model.b)},
                {"T_s", spec.model.T},
                {"T_pu", spec.model.T_pu},
                {"spectral_radius", spectral_radius(spec.model.A)}};
  try {
    out.metrics = metrics(out.trace, cfg.controller.alpha, cfg.controller.vref_pu, cfg.sim.band, cfg.sim.tail_fraction);
    s["metrics"] = metrics_json(*out.metrics);
  } catch (const ParameterError& e) {
    s["metrics"] = nullptr;
    s["metrics_error"] = e.what();
  }
  // One metrics block per stretch between load events.
  json segments = json::array();
  std::vector<std::size_t> cuts{0};
  for (const Event& e : cfg.sim.events) {
    if (e.at_step != cuts.back()) cuts.push_back(e.at_step);
  }
  cuts.push_back(out.trace.rows.size());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    const std::span<const TraceRow> rows(out.trace.rows.data() + cuts[i], cuts[i + 1] - cuts[i]);
    segments.push_back({{"from_step", cuts[i]},
                        {"to_step", cuts[i + 1]},
                        {"metrics", metrics_json(metrics(rows, out.trace.T, cfg.controller.alpha,
                                                         cfg.controller.vref_pu, cfg.sim.band,
                                                         cfg.sim.tail_fraction))}});
  }
  s["segments"] = segments;
  s["discrepancies"] = discrepancy_report(cfg, out.gains);
  json warnings = json::array();
  for (const std::string& w : validate(cfg.per_unit())) warnings.push_back(w);
  s["warnings"] = warnings;
  return out;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"fig2", "fig3", "fig4", "fig5", "fig6a", "fig6b", "fig3i", "fig4i"};
  return names;
}

inline constexpr double kLoadStep = 1.3;

struct PresetPlan {
  json doc;
  std::optional<json> preroll;  // run first; its final state becomes sim.x0
};

// Preset documents on top of the reference configuration:
//   fig2   startup from x = 0
//   fig3   startup, then R -> 1.3 R at mid-run
//   fig4   from the end of fig3 (1.3 R), R restored at mid-run
//   fig5   steady window after a fig2-length pre-roll
//   fig6a  startup with source noise of amplitude 0.1
//   fig6b  startup with source noise of amplitude 0.3
//   fig3i / fig4i   as fig3 / fig4 with R -> R / 1.3 (30% more load current)
// Overrides are applied before the preset (so sim.steps moves the mid-run
// event) and again after it (so they win over preset fields).
inline PresetPlan preset_plan(std::string_view name, const std::vector<std::string>& overrides = {}) {
  bool known = false;
  for (const auto& n : preset_names()) known = known || n == name;
  if (!known) throw ConfigError("preset", "unknown preset '" + std::string(name) + "'");

  json base = json::parse(kReferenceJson);
  apply_overrides(base, overrides);
  std::size_t steps = 0;
  if (base["sim"].is_object() && base["sim"]["steps"].is_number_unsigned()) {
    steps = base["sim"]["steps"].get<std::size_t>();
  }
  const std::size_t mid = steps / 2;

  auto finish = [&](json doc) {
    apply_overrides(doc, overrides);
    return doc;
  };
  auto with_events = [&](json doc, std::vector<std::pair<std::size_t, double>> evs) {
    json arr = json::array();
    for (auto [at, f] : evs) arr.push_back({{"at_step", at}, {"load_scale", f}});
    doc["sim"]["events"] = arr;
    return doc;
  };
  auto with_noise = [&](json doc, double a) {
    doc["sim"]["noise_amplitude"] = a;
    return doc;
  };

  if (name == "fig2") return {finish(base), std::nullopt};
  if (name == "fig3") return {finish(with_events(base, {{mid, kLoadStep}})), std::nullopt};
  if (name == "fig3i") return {finish(with_events(base, {{mid, 1.0 / kLoadStep}})), std::nullopt};
  if (name == "fig4" || name == "fig4i") {
    const double f = name == "fig4" ? kLoadStep : 1.0 / kLoadStep;
    return {finish(with_events(base, {{0, f}, {mid, 1.0}})), finish(with_events(base, {{mid, f}}))};
  }
  if (name == "fig5") return {finish(base), finish(base)};
  if (name == "fig6a") return {finish(with_noise(base, 0.1)), std::nullopt};
  return {finish(with_noise(base, 0.3)), std::nullopt};  // fig6b
}

inline RunOutcome run_preset(std::string_view name, const std::vector<std::string>& overrides = {},
                             RunOptions opts = {}) {
  PresetPlan plan = preset_plan(name, overrides);
  if (plan.preroll) {
    const RunConfig pre = parse_config(*plan.preroll);
    const ProblemSpec spec = problem_from(pre, opts);
    const Gains g = synthesize_gains(spec);
    const Trace t = run(spec.model, g.policy, spec, scenario_from(pre));
    plan.doc["sim"]["x0"] = to_json(t.final_state);
  }
  return run_config(parse_config(plan.doc), opts, name);
}

struct SweepRow {
  double beta = 0.0;
  std::size_t switch_count = 0;
  double ripple_pp = 0.0;
  std::optional<double> settling_time;
};

// Steady-window metrics for one configuration: run sim.steps from x0 as a
// pre-roll, then measure a second window of sim.steps from where it ended.
inline Metrics steady_window_metrics(const RunConfig& cfg, RunOptions opts = {}) {
  const ProblemSpec spec = problem_from(cfg, opts);
  const Gains g = synthesize_gains(spec);
  Scenario sc = scenario_from(cfg);
  sc.events.clear();
  const Trace pre = run(spec.model, g.policy, spec, sc);
  sc.x0 = pre.final_state;
  const Trace window = run(spec.model, g.policy, spec, sc);
  return metrics(window, cfg.controller.alpha, cfg.controller.vref_pu, cfg.sim.band, cfg.sim.tail_fraction);
}

inline std::vector<SweepRow> sweep_beta(const std::vector<double>& values, const RunConfig& base,
                                        RunOptions opts = {}) {
  if (values.empty()) throw ConfigError("values", "beta sweep needs at least one value");
  std::vector<SweepRow> rows;
  for (double beta : values) {
    if (!(beta >= 0.0)) throw ConfigError("values", "beta must be non-negative, got " + std::to_string(beta));
    RunConfig cfg = base;
    cfg.controller.beta = beta;
    try {
      const Metrics m = steady_window_metrics(cfg, opts);
      rows.push_back({beta, m.switch_count, m.ripple_pp, m.settling_time});
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw NumericError("beta = " + std::to_string(beta) + ": " + e.what());
    }
  }
  return rows;
}

inline json sweep_json(const std::vector<SweepRow>& rows) {
  json out = json::array();
  for (const SweepRow& r : rows) {
    out.push_back({{"beta", r.beta},
                   {"switch_count", r.switch_count},
                   {"ripple_pp", r.ripple_pp},
                   {"settling_time", r.settling_time ? json(*r.settling_time) : json(nullptr)}});
  }
  return out;
}

// Default grid box for value iteration on the buck: covers startup and the
// regulated operating point with room for one-step successors.
inline GridBox default_grid_box() { return {{-0.5, -1.5}, {1.5, 2.5}}; }

struct OracleOptions {
  std::size_t horizon = 12;
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  std::size_t grid_resolution = 101;
  std::size_t grid_max_sweeps = 2000;
  double grid_tol = 1e-9;
};

inline json oracle_compare(const RunConfig& cfg, const OracleOptions& o, RunOptions opts = {}) {
  const ProblemSpec spec = problem_from(cfg, opts);
  const Gains g = synthesize_gains(spec);
  const HorizonResult h = compare_horizon(spec, g.policy, cfg.sim.x0, to_switch(cfg.sim.z0), o.horizon);

  Rng rng(o.seed);
  std::vector<Vector> states;
  for (std::size_t i = 0; i < o.samples; ++i) states.push_back(rng.uniform_vector(2, -kStateBox, kStateBox));
  const Switch zs[] = {Switch::Off, Switch::On};
  const std::size_t agreement_horizon = std::min(o.horizon, kMaxAgreementHorizon);
  const AgreementReport agree = first_action_agreement(spec, g.policy, states, zs, agreement_horizon);

  const GridValue grid = grid_value_iteration(spec, default_grid_box(), o.grid_resolution, o.grid_max_sweeps, o.grid_tol);

  return {{"horizon", o.horizon},
          {"best_cost", h.best_cost},
          {"policy_cost", h.policy_cost},
          {"gap", h.gap},
          {"tail_bound", h.tail_bound},
          {"agreement_fraction", agree.fraction},
          {"agreement_samples", agree.samples},
          {"agreement_horizon", agree.horizon},
          {"clamped_successor_count", grid.clamped_successor_count},
          {"grid_policy_agreement", grid_policy_agreement(grid, g.policy)},
          {"grid_sweeps", grid.sweeps},
          {"grid_converged", grid.converged}};
}

}  // namespace switchstate
