#pragma once

// Ground truth for the switch-state controller on the original (unmodified)
// cost: exhaustive search over binary input sequences on a truncated horizon,
// and value iteration of the exact Bellman operator on a state grid.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "switchstate/controller.hpp"
#include "switchstate/errors.hpp"
#include "switchstate/linalg.hpp"

namespace switchstate {

inline constexpr std::size_t kMaxEnumerationHorizon = 20;

namespace detail {

// Running cost on raw columns; shared by every enumeration and rollout so
// their costs are bit-identical for identical input sequences.
inline double running_cost(const ProblemSpec& spec, const double* x, int z, int u) {
  const Eigen::Index n = spec.r.size();
  double q = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) row += spec.Q(i, j) * (x[j] - spec.r(j));
    q += (x[i] - spec.r(i)) * row;
  }
  return q + spec.beta * std::abs(u - z);
}

inline void advance(const ProblemSpec& spec, const double* x, int u, double* out) {
  const Eigen::Index n = spec.r.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) s += spec.model.A(i, j) * x[j];
    out[i] = u ? s + spec.model.b(i) : s;
  }
}

inline std::vector<double> discount_powers(double alpha, std::size_t n) {
  std::vector<double> pw(n + 1, 1.0);
  for (std::size_t k = 1; k <= n; ++k) pw[k] = pw[k - 1] * alpha;
  return pw;
}

inline void check_horizon(std::size_t n) {
  if (n > kMaxEnumerationHorizon) {
    throw GuardError("horizon " + std::to_string(n) + " exceeds the enumeration guard of " +
                     std::to_string(kMaxEnumerationHorizon));
  }
}

// Input u_k of sequence `code` over horizon n; u_0 is the most significant
// bit so numeric order is lexicographic order.
inline int input_bit(std::uint32_t code, std::size_t n, std::size_t k) {
  return static_cast<int>((code >> (n - 1 - k)) & 1u);
}

}  // namespace detail

struct EnumerationResult {
  std::vector<Switch> sequence;
  double cost = 0.0;
};

// Exact minimum of sum_{k<N} alpha^k c(x_k, z_k, u_k) over all 2^N input
// sequences, visiting them in lexicographic order. Ties keep the
// lexicographically smallest sequence.
inline EnumerationResult brute_force(const ProblemSpec& spec, const Vector& x0, Switch z0, std::size_t horizon) {
  detail::check_horizon(horizon);
  const Eigen::Index n = spec.model.n();
  if (x0.size() != n) throw DimensionError("brute_force: x0 size mismatch");
  const auto pw = detail::discount_powers(spec.alpha, horizon);

  std::uint32_t best_code = 0;
  double best = std::numeric_limits<double>::infinity();
  Vector x(n), next(n);
  const std::uint32_t count = 1u << horizon;
  for (std::uint32_t code = 0; code < count; ++code) {
    x = x0;
    int z = to_int(z0);
    double j = 0.0;
    for (std::size_t k = 0; k < horizon; ++k) {
      const int u = detail::input_bit(code, horizon, k);
      j += pw[k] * detail::running_cost(spec, x.data(), z, u);
      detail::advance(spec, x.data(), u, next.data());
      x.swap(next);
      z = u;
    }
    if (j < best) {
      best = j;
      best_code = code;
    }
  }
  EnumerationResult out{std::vector<Switch>(horizon), horizon == 0 ? 0.0 : best};
  for (std::size_t k = 0; k < horizon; ++k) out.sequence[k] = to_switch(detail::input_bit(best_code, horizon, k));
  return out;
}

// Same search in reflected Gray-code order. Consecutive codes differ in one
// input, so only the suffix after the flipped step is recomputed from stored
// prefix states and partial sums.
inline EnumerationResult brute_force_gray(const ProblemSpec& spec, const Vector& x0, Switch z0,
                                          std::size_t horizon) {
  detail::check_horizon(horizon);
  const Eigen::Index n = spec.model.n();
  if (x0.size() != n) throw DimensionError("brute_force_gray: x0 size mismatch");
  if (horizon == 0) return {{}, 0.0};
  const auto pw = detail::discount_powers(spec.alpha, horizon);

  // states.col(k) is x_k, partial[k] the cost of steps < k, for the current code.
  Matrix states(n, static_cast<Eigen::Index>(horizon) + 1);
  std::vector<double> partial(horizon + 1, 0.0);
  states.col(0) = x0;

  auto evaluate_from = [&](std::uint32_t code, std::size_t from) {
    for (std::size_t k = from; k < horizon; ++k) {
      const int u = detail::input_bit(code, horizon, k);
      const int z = k == 0 ? to_int(z0) : detail::input_bit(code, horizon, k - 1);
      const auto col = static_cast<Eigen::Index>(k);
      partial[k + 1] = partial[k] + pw[k] * detail::running_cost(spec, &states(0, col), z, u);
      detail::advance(spec, &states(0, col), u, &states(0, col + 1));
    }
    return partial[horizon];
  };

  std::uint32_t best_code = 0;
  double best = evaluate_from(0, 0);
  std::uint32_t prev = 0;
  const std::uint32_t count = 1u << horizon;
  for (std::uint32_t i = 1; i < count; ++i) {
    const std::uint32_t code = i ^ (i >> 1);
    const std::uint32_t flipped = code ^ prev;
    const auto bit = static_cast<std::size_t>(std::countr_zero(flipped));
    const std::size_t step = horizon - 1 - bit;
    const double j = evaluate_from(code, step);
    if (j < best || (j == best && code < best_code)) {
      best = j;
      best_code = code;
    }
    prev = code;
  }
  EnumerationResult out{std::vector<Switch>(horizon), best};
  for (std::size_t k = 0; k < horizon; ++k) out.sequence[k] = to_switch(detail::input_bit(best_code, horizon, k));
  return out;
}

struct Rollout {
  std::vector<Switch> sequence;
  double cost = 0.0;
  double max_stage_cost = 0.0;
};

inline Rollout rollout(const ProblemSpec& spec, const AffinePolicy& pol, const Vector& x0, Switch z0,
                       std::size_t horizon) {
  if (horizon > 1'000'000) throw GuardError("rollout horizon above 10^6");
  const Eigen::Index n = spec.model.n();
  if (x0.size() != n) throw DimensionError("rollout: x0 size mismatch");
  const auto pw = detail::discount_powers(spec.alpha, horizon);
  Rollout out;
  out.sequence.reserve(horizon);
  Vector x = x0, next(n);
  Switch z = z0;
  for (std::size_t k = 0; k < horizon; ++k) {
    const Switch u = policy(pol, x, z);
    const double c = detail::running_cost(spec, x.data(), to_int(z), to_int(u));
    out.cost += pw[k] * c;
    out.max_stage_cost = std::max(out.max_stage_cost, c);
    detail::advance(spec, x.data(), to_int(u), next.data());
    x.swap(next);
    z = u;
    out.sequence.push_back(u);
  }
  return out;
}

inline double rollout_cost(const ProblemSpec& spec, const AffinePolicy& pol, const Vector& x0, Switch z0,
                           std::size_t horizon) {
  return rollout(spec, pol, x0, z0, horizon).cost;
}

struct HorizonResult {
  std::vector<Switch> best_sequence;
  double best_cost = 0.0;
  double policy_cost = 0.0;
  double gap = 0.0;         // policy_cost - best_cost, never negative
  double tail_bound = 0.0;  // alpha^N c_max / (1 - alpha)
};

inline HorizonResult compare_horizon(const ProblemSpec& spec, const AffinePolicy& pol, const Vector& x0, Switch z0,
                                     std::size_t horizon) {
  const EnumerationResult best = brute_force(spec, x0, z0, horizon);
  const Rollout roll = rollout(spec, pol, x0, z0, horizon);
  const double c_max = std::max(roll.max_stage_cost, quadratic_distance(spec, x0) + spec.beta);
  return {best.sequence, best.cost, roll.cost, roll.cost - best.cost,
          std::pow(spec.alpha, static_cast<double>(horizon)) * c_max / (1.0 - spec.alpha)};
}

struct AgreementReport {
  double fraction = 0.0;
  std::size_t samples = 0;
  std::size_t horizon = 0;
  double tail_bound = 0.0;
};

inline constexpr std::size_t kMaxAgreementHorizon = 16;

// Fraction of (x, z) pairs on which the affine rule's action equals the first
// action of the horizon-N exhaustive optimum.
inline AgreementReport first_action_agreement(const ProblemSpec& spec, const AffinePolicy& pol,
                                              std::span<const Vector> states, std::span<const Switch> z_values,
                                              std::size_t horizon) {
  if (horizon > kMaxAgreementHorizon) throw GuardError("first_action_agreement: horizon above 16");
  if (horizon == 0) throw ParameterError("first_action_agreement: horizon must be positive");
  AgreementReport rep;
  rep.horizon = horizon;
  std::size_t agree = 0;
  double c_max = 0.0;
  for (const Vector& x : states) {
    for (const Switch z : z_values) {
      const EnumerationResult best = brute_force(spec, x, z, horizon);
      agree += best.sequence.front() == policy(pol, x, z) ? 1 : 0;
      ++rep.samples;
      c_max = std::max(c_max, quadratic_distance(spec, x) + spec.beta);
    }
  }
  rep.fraction = rep.samples == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(rep.samples);
  rep.tail_bound = std::pow(spec.alpha, static_cast<double>(horizon)) * c_max / (1.0 - spec.alpha);
  return rep;
}

struct GridBox {
  std::array<double, 2> lo{};
  std::array<double, 2> hi{};
};

struct GridValue {
  GridBox box;
  std::size_t resolution = 0;
  // Row-major over (i along state 0, j along state 1); index i * resolution + j.
  std::vector<double> V0, V1;
  std::vector<std::uint8_t> policy0, policy1;
  std::vector<double> sweep_changes;  // sup-norm change per sweep
  std::size_t sweeps = 0;
  bool converged = false;
  std::size_t clamped_successor_count = 0;

  Vector node(std::size_t i, std::size_t j) const {
    Vector x(2);
    const double h0 = (box.hi[0] - box.lo[0]) / static_cast<double>(resolution - 1);
    const double h1 = (box.hi[1] - box.lo[1]) / static_cast<double>(resolution - 1);
    x << box.lo[0] + h0 * static_cast<double>(i), box.lo[1] + h1 * static_cast<double>(j);
    return x;
  }
};

namespace detail {

struct Stencil {
  std::array<std::size_t, 4> idx{};
  std::array<double, 4> w{};
};

// Bilinear stencil for point x; coordinates outside the box are clamped to
// its boundary and reported through `clamped`.
inline Stencil bilinear(const GridBox& box, std::size_t res, const Vector& x, bool& clamped) {
  Stencil s;
  std::array<std::size_t, 2> cell{};
  std::array<double, 2> frac{};
  for (int d = 0; d < 2; ++d) {
    double c = x(d);
    if (c < box.lo[d]) {
      c = box.lo[d];
      clamped = true;
    } else if (c > box.hi[d]) {
      c = box.hi[d];
      clamped = true;
    }
    const double pos = (c - box.lo[d]) / (box.hi[d] - box.lo[d]) * static_cast<double>(res - 1);
    auto i = static_cast<std::size_t>(std::floor(pos));
    if (i >= res - 1) i = res - 2;
    cell[d] = i;
    frac[d] = pos - static_cast<double>(i);
  }
  const std::size_t base = cell[0] * res + cell[1];
  s.idx = {base, base + 1, base + res, base + res + 1};
  s.w = {(1 - frac[0]) * (1 - frac[1]), (1 - frac[0]) * frac[1], frac[0] * (1 - frac[1]), frac[0] * frac[1]};
  return s;
}

inline double interpolate(const Stencil& s, const std::vector<double>& v) {
  return s.w[0] * v[s.idx[0]] + s.w[1] * v[s.idx[1]] + s.w[2] * v[s.idx[2]] + s.w[3] * v[s.idx[3]];
}

}  // namespace detail

// Value iteration of V(x, z) = min_u { c(x, z, u) + alpha V(Ax + bu, u) } on a
// uniform grid over a 2-D box, bilinear interpolation off-grid, Jacobi
// updates from V = 0. Stops when the sup-norm change drops below `tol` or
// after `max_sweeps`. The greedy policy grids come from the final iterate and
// switch on when both branches tie.
inline GridValue grid_value_iteration(const ProblemSpec& spec, const GridBox& box, std::size_t resolution,
                                      std::size_t max_sweeps, double tol) {
  if (spec.model.n() != 2) throw DimensionError("grid_value_iteration supports two-state models only");
  if (resolution < 11) throw ParameterError("grid_value_iteration: resolution must be at least 11");
  if (!(box.hi[0] > box.lo[0] && box.hi[1] > box.lo[1])) throw ParameterError("grid_value_iteration: empty box");

  GridValue g;
  g.box = box;
  g.resolution = resolution;
  const std::size_t nodes = resolution * resolution;

  // Successor stencils and running costs are fixed per (node, u).
  std::vector<detail::Stencil> succ[2];
  std::vector<double> q(nodes);
  succ[0].resize(nodes);
  succ[1].resize(nodes);
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      const std::size_t id = i * resolution + j;
      const Vector x = g.node(i, j);
      q[id] = quadratic_distance(spec, x);
      const Vector ax = spec.model.A * x;
      for (int u = 0; u < 2; ++u) {
        bool clamped = false;
        succ[u][id] = detail::bilinear(box, resolution, u ? Vector(ax + spec.model.b) : ax, clamped);
        g.clamped_successor_count += clamped ? 1 : 0;
      }
    }
  }

  std::vector<double> V[2] = {std::vector<double>(nodes, 0.0), std::vector<double>(nodes, 0.0)};
  std::vector<double> next[2] = {std::vector<double>(nodes), std::vector<double>(nodes)};
  const double alpha = spec.alpha;
  const double beta = spec.beta;

  std::size_t growing = 0;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t id = 0; id < nodes; ++id) {
      const double off = alpha * detail::interpolate(succ[0][id], V[0]);
      const double on = alpha * detail::interpolate(succ[1][id], V[1]);
      for (int z = 0; z < 2; ++z) {
        const double val = q[id] + std::min(beta * z + off, beta * (1 - z) + on);
        change = std::max(change, std::abs(val - V[z][id]));
        next[z][id] = val;
      }
    }
    std::swap(V[0], next[0]);
    std::swap(V[1], next[1]);
    g.sweep_changes.push_back(change);
    ++g.sweeps;

    const std::size_t s = g.sweep_changes.size();
    growing = (s >= 2 && g.sweep_changes[s - 1] > g.sweep_changes[s - 2]) ? growing + 1 : 0;
    if (growing >= 5) {
      throw NumericError("grid_value_iteration: sup-norm change grew for 5 consecutive sweeps");
    }
    if (change < tol) {
      g.converged = true;
      break;
    }
  }

  g.policy0.resize(nodes);
  g.policy1.resize(nodes);
  for (std::size_t id = 0; id < nodes; ++id) {
    const double off = alpha * detail::interpolate(succ[0][id], V[0]);
    const double on = alpha * detail::interpolate(succ[1][id], V[1]);
    g.policy0[id] = (beta + on <= off) ? 1 : 0;
    g.policy1[id] = (on <= beta + off) ? 1 : 0;
  }
  g.V0 = std::move(V[0]);
  g.V1 = std::move(V[1]);
  return g;
}

// Fraction of (node, z) pairs where the affine rule matches the grid's greedy
// policy.
inline double grid_policy_agreement(const GridValue& g, const AffinePolicy& pol) {
  std::size_t agree = 0;
  for (std::size_t i = 0; i < g.resolution; ++i) {
    for (std::size_t j = 0; j < g.resolution; ++j) {
      const std::size_t id = i * g.resolution + j;
      const Vector x = g.node(i, j);
      agree += to_int(policy(pol, x, Switch::Off)) == g.policy0[id] ? 1 : 0;
      agree += to_int(policy(pol, x, Switch::On)) == g.policy1[id] ? 1 : 0;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(2 * g.resolution * g.resolution);
}

}  // namespace switchstate
