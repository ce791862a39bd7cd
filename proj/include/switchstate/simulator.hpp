#pragma once

// Closed-loop simulation of the switch-state controller on a discrete plant,
// with load-step events and source-voltage noise, plus the scalar metrics
// extracted from a run.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "switchstate/controller.hpp"
#include "switchstate/errors.hpp"
#include "switchstate/linalg.hpp"
#include "switchstate/plant.hpp"
#include "switchstate/random.hpp"

namespace switchstate {

// Sets the load to factor * R_nominal (so factor 1 restores nominal).
struct LoadScale {
  double factor = 1.0;
};

struct Event {
  std::size_t at_step = 0;
  LoadScale load;
};

struct Scenario {
  std::size_t steps = 0;
  Vector x0;
  Switch z0 = Switch::Off;
  std::vector<Event> events;
  double noise_amplitude = 0.0;  // half-width of the uniform draw on V_s, p.u.
  std::uint64_t seed = 1;
};

struct TraceRow {
  std::size_t k = 0;
  double t = 0.0;  // seconds
  double v = 0.0;  // capacitor voltage, p.u.
  double i = 0.0;  // inductor current, p.u.
  Switch u = Switch::Off;
  Switch z = Switch::Off;
  double stage_cost = 0.0;
  double J_partial = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  double T = 0.0;  // seconds per step
  std::uint64_t seed = 0;
  std::string generator{Rng::kName};
  std::string config_hash;
  std::size_t plant_rebuilds = 0;
  Vector final_state;  // x_N, one step past the last row
};

// Any state component beyond this magnitude (p.u.) aborts the run.
inline constexpr double kDivergenceLimit = 1e3;

inline void validate(const Scenario& s, Eigen::Index n) {
  if (s.x0.size() != n) throw DimensionError("scenario: x0 does not match the model dimension");
  require_finite(s.x0, "x0");
  if (!(s.noise_amplitude >= 0.0) || !std::isfinite(s.noise_amplitude)) {
    throw ParameterError("scenario: noise amplitude must be non-negative");
  }
  std::size_t prev = 0;
  for (const Event& e : s.events) {
    if (e.at_step >= s.steps) throw ParameterError("scenario: event step outside [0, steps)");
    if (e.at_step < prev) throw ParameterError("scenario: events must be sorted by step");
    if (!(e.load.factor > 0.0)) throw ParameterError("scenario: load scale factor must be positive");
    prev = e.at_step;
  }
}

// Runs x_{k+1} = A x_k + b u_k, z_{k+1} = u_k under the affine switching rule.
//
// Load events rebuild the plant from the model's PlantSource with a scaled R;
// the controller keeps its nominal gains. Noise scales the input column by
// (1 + eta_k / V_s) with eta_k ~ U[-a, a] drawn fresh each step.
inline Trace run(const SystemModel& nominal, const AffinePolicy& pol, const ProblemSpec& spec,
                 const Scenario& scenario) {
  const Eigen::Index n = nominal.n();
  validate(scenario, n);
  if (n < 2) throw DimensionError("run: trace rows need at least two states (v, i)");
  if (!scenario.events.empty() && !nominal.source) {
    throw ParameterError("run: load events need a model built by discretize_plant");
  }

  Trace trace;
  trace.T = nominal.T;
  trace.seed = scenario.seed;
  trace.rows.reserve(scenario.steps);

  // Points at the nominal model until an event replaces the plant.
  const SystemModel* plant = &nominal;
  SystemModel rebuilt;
  const double v_source = nominal.source ? nominal.source->params.V_s : 1.0;

  Rng rng(scenario.seed);
  Vector x = scenario.x0;
  Switch z = scenario.z0;
  double discount = 1.0;
  double j = 0.0;
  auto next_event = scenario.events.begin();

  for (std::size_t k = 0; k < scenario.steps; ++k) {
    for (; next_event != scenario.events.end() && next_event->at_step == k; ++next_event) {
      const PlantSource& src = *nominal.source;
      rebuilt = discretize_plant(with_load_scale(src.params, next_event->load.factor), src.f_s,
                                 src.omega_base, src.sign);
      plant = &rebuilt;
      ++trace.plant_rebuilds;
    }

    const Switch u = policy(pol, x, z);
    const double cost = stage_cost(spec, x, z, u);
    j += discount * cost;
    discount *= spec.alpha;
    trace.rows.push_back({k, static_cast<double>(k) * nominal.T, x(0), x(1), u, z, cost, j});

    double input_gain = 1.0;
    if (scenario.noise_amplitude > 0.0) {
      input_gain += rng.uniform(-scenario.noise_amplitude, scenario.noise_amplitude) / v_source;
    }
    x = plant->A * x;
    if (u == Switch::On) x += input_gain * plant->b;
    if (!x.allFinite() || inf_norm(x) > kDivergenceLimit) {
      throw DivergenceError(k + 1, "state magnitude exceeded " + std::to_string(kDivergenceLimit) + " p.u.");
    }
    z = u;
  }
  trace.final_state = x;
  return trace;
}

struct DiscountedCost {
  double J_truncated = 0.0;
  double J_tail_bound = 0.0;
};

// Sum of alpha^k * stage_cost (k counted from the first row of `rows`), and
// alpha^N * c_max / (1 - alpha) bounding the cost beyond the window if the
// running cost never exceeds the largest one observed.
inline DiscountedCost discounted_cost(std::span<const TraceRow> rows, double alpha) {
  if (rows.empty()) throw ParameterError("discounted_cost: empty trace");
  DiscountedCost out;
  double discount = 1.0;
  double c_max = 0.0;
  for (const TraceRow& r : rows) {
    out.J_truncated += discount * r.stage_cost;
    discount *= alpha;
    c_max = std::max(c_max, r.stage_cost);
  }
  out.J_tail_bound = discount * c_max / (1.0 - alpha);
  return out;
}

inline DiscountedCost discounted_cost(const Trace& trace, double alpha) { return discounted_cost(trace.rows, alpha); }

struct Metrics {
  std::optional<double> settling_time;  // seconds; empty if the band is never held to the end
  double overshoot_fraction = 0.0;
  double ripple_pp = 0.0;
  std::size_t switch_count = 0;
  double mean_switching_frequency = 0.0;  // Hz
  double J_truncated = 0.0;
  double J_tail_bound = 0.0;
};

// Defaults for `metrics`: a 2% settling band and the final quarter of the
// run as the ripple window.
inline constexpr double kSettlingBand = 0.02;
inline constexpr double kTailFraction = 0.25;

// settling_time is the `t` of the first row from which every remaining row
// stays within band * r_v of r_v.
inline Metrics metrics(std::span<const TraceRow> rows, double T, double alpha, double r_v,
                       double band = kSettlingBand, double tail_fraction = kTailFraction) {
  if (rows.empty()) throw ParameterError("metrics: empty trace");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw ParameterError("metrics: tail fraction must be in (0, 1]");
  Metrics m;

  const double tol = band * std::abs(r_v);
  std::optional<std::size_t> entry;
  for (std::size_t i = rows.size(); i-- > 0;) {
    if (std::abs(rows[i].v - r_v) > tol) break;
    entry = i;
  }
  if (entry) m.settling_time = rows[*entry].t;

  double v_max = rows.front().v;
  for (const TraceRow& r : rows) {
    v_max = std::max(v_max, r.v);
    m.switch_count += static_cast<std::size_t>(std::abs(to_int(r.u) - to_int(r.z)));
  }
  m.overshoot_fraction = std::max(0.0, v_max - r_v) / std::abs(r_v);

  const auto tail_len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(rows.size()))));
  const auto tail = rows.last(tail_len);
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end(),
                                            [](const TraceRow& a, const TraceRow& b) { return a.v < b.v; });
  m.ripple_pp = hi->v - lo->v;

  const double duration = static_cast<double>(rows.size()) * T;
  m.mean_switching_frequency = static_cast<double>(m.switch_count) / (2.0 * duration);

  const DiscountedCost dc = discounted_cost(rows, alpha);
  m.J_truncated = dc.J_truncated;
  m.J_tail_bound = dc.J_tail_bound;
  return m;
}

inline Metrics metrics(const Trace& trace, double alpha, double r_v, double band = kSettlingBand,
                       double tail_fraction = kTailFraction) {
  return metrics(trace.rows, trace.T, alpha, r_v, band, tail_fraction);
}

inline std::string format_g12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline constexpr const char* kCsvHeader = "k,t_s,v_pu,i_pu,u,z,stage_cost,J_partial";

// One comment line (config hash, generator, seed), the column header, then
// one row per step. Floats carry 12 significant digits; lines end in '\n'.
inline void write_csv(std::ostream& os, const Trace& trace) {
  os << "# config_hash=" << trace.config_hash << " generator=" << trace.generator << " seed=" << trace.seed
     << '\n';
  os << kCsvHeader << '\n';
  for (const TraceRow& r : trace.rows) {
    os << r.k << ',' << format_g12(r.t) << ',' << format_g12(r.v) << ',' << format_g12(r.i) << ',' << to_int(r.u)
       << ',' << to_int(r.z) << ',' << format_g12(r.stage_cost) << ',' << format_g12(r.J_partial) << '\n';
  }
}

}  // namespace switchstate
