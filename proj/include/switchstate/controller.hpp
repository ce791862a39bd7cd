#pragma once

// Optimal on-off controller for x_{k+1} = A x_k + b u_k, u in {0, 1}, with
// running cost (x - r)^T Q (x - r) + beta |u - z| and discount alpha, where z
// is the switch position held from the previous step.
//
// The value function is the quadratic V(x) = (x - theta)^T P (x - theta) + v
// that satisfies the symmetrized Bellman identity
//
//   V(x) = q(x) + (beta + alpha V(Ax) + alpha V(Ax + b)) / 2,
//
// which is exact for the modified running cost
//   cbar(x, z) = q(x) + |beta + (1 - 2z) alpha f(x)| / 2,
// with f(x) = V(Ax + b) - V(Ax). The switching rule compares f against the
// hysteresis thresholds +-beta/alpha.

#include <cmath>
#include <cstdint>
#include <string>
#include <limits>
#include <utility>

#include "switchstate/errors.hpp"
#include "switchstate/linalg.hpp"
#include "switchstate/plant.hpp"
#include "switchstate/random.hpp"

namespace switchstate {

enum class Switch : std::uint8_t { Off = 0, On = 1 };

constexpr int to_int(Switch s) { return static_cast<int>(s); }

inline Switch to_switch(int v) {
  if (v != 0 && v != 1) throw ParameterError("switch state must be 0 or 1, got " + std::to_string(v));
  return static_cast<Switch>(v);
}

struct ProblemOptions {
  // Admits beta = 0 and alpha = 0. Only meaningful for property tests and
  // oracle cross-checks.
  bool allow_degenerate = false;
};

struct ProblemSpec {
  SystemModel model;
  Matrix Q;
  Vector r;
  double alpha = 0.0;
  double beta = 0.0;
};

inline ProblemSpec make_problem(SystemModel model, Matrix q, Vector r, double alpha, double beta,
                                ProblemOptions opts = {}) {
  const Eigen::Index n = model.n();
  require_square(q, "Q");
  if (q.rows() != n || r.size() != n) throw DimensionError("problem: Q/r do not match the model dimension");
  require_finite(q, "Q");
  require_finite(r, "r");
  if (inf_norm(q - q.transpose()) > 1e-12 * std::max(1.0, inf_norm(q))) {
    throw ParameterError("problem: Q is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, inf_norm(q))) {
    throw ParameterError("problem: Q is not positive semidefinite");
  }
  const bool alpha_ok = opts.allow_degenerate ? (alpha >= 0.0 && alpha < 1.0) : (alpha > 0.0 && alpha < 1.0);
  if (!alpha_ok) throw ParameterError("problem: discount alpha out of range: " + std::to_string(alpha));
  const bool beta_ok = opts.allow_degenerate ? beta >= 0.0 : beta > 0.0;
  if (!beta_ok || !std::isfinite(beta)) {
    throw ParameterError("problem: switching penalty beta out of range: " + std::to_string(beta));
  }
  const double rho = spectral_radius(model.A);
  if (alpha * rho * rho >= 1.0) {
    throw NonConvergenceError("problem: alpha * rho(A)^2 = " + std::to_string(alpha * rho * rho) + " >= 1");
  }
  return {std::move(model), std::move(q), std::move(r), alpha, beta};
}

struct RegulationTargets {
  Matrix Q;
  Vector r;
};

// Output regulation y = h x -> s, expressed as Q = h^T h, r = h^T s / (h h^T).
inline RegulationTargets regulation_targets(const Vector& h, double s) {
  const double hh = h.squaredNorm();
  if (!(hh > 0.0)) throw ParameterError("regulation_targets: output map h must be nonzero");
  return {h * h.transpose(), h * (s / hh)};
}

inline double quadratic_distance(const ProblemSpec& spec, const Vector& x) {
  if (x.size() != spec.r.size()) throw DimensionError("quadratic_distance: state size mismatch");
  const Vector e = x - spec.r;
  return e.dot(spec.Q * e);
}

inline double stage_cost(const ProblemSpec& spec, const Vector& x, Switch z, Switch u) {
  return quadratic_distance(spec, x) + spec.beta * std::abs(to_int(u) - to_int(z));
}

struct ValueFunction {
  Matrix P;
  Vector theta;
  double v = 0.0;
};

inline double value_eval(const ValueFunction& V, const Vector& x) {
  if (x.size() != V.theta.size()) throw DimensionError("value_eval: state size mismatch");
  const Vector e = x - V.theta;
  return e.dot(V.P * e) + V.v;
}

// f(x) = V(Ax + b) - V(Ax). The constant v cancels and is left out so the
// difference is not taken between two large numbers.
inline double f_direct(const ValueFunction& V, const SystemModel& model, const Vector& x) {
  if (x.size() != V.theta.size()) throw DimensionError("f_direct: state size mismatch");
  const Vector e0 = model.A * x - V.theta;
  const Vector e1 = e0 + model.b;
  return e1.dot(V.P * e1) - e0.dot(V.P * e0);
}

// V(x) - [q(x) + (beta + alpha V(Ax) + alpha V(Ax + b)) / 2].
inline double bellman_residual(const ProblemSpec& spec, const ValueFunction& V, const Vector& x) {
  const Vector ax = spec.model.A * x;
  const double rhs = quadratic_distance(spec, x) +
                     0.5 * (spec.beta + spec.alpha * value_eval(V, ax) +
                            spec.alpha * value_eval(V, ax + spec.model.b));
  return value_eval(V, x) - rhs;
}

// Half-width of the box states are drawn from when checking the value
// function and policy coefficients. Brackets the buck operating envelope.
inline constexpr double kStateBox = 2.0;
inline constexpr std::uint64_t kCheckSeed = 0x5eed'0001;

inline double max_bellman_residual(const ProblemSpec& spec, const ValueFunction& V,
                                   std::size_t samples = 1000, std::uint64_t seed = kCheckSeed) {
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Vector x = rng.uniform_vector(spec.model.n(), -kStateBox, kStateBox);
    worst = std::max(worst, std::abs(bellman_residual(spec, V, x)));
  }
  return worst;
}

// Closed-form solution of the symmetrized Bellman identity:
//   P     = Q + alpha A^T P A
//   theta = P^{-1} (I - alpha A^T)^{-1} (Q r - alpha A^T P b / 2)
//   v     = (r^T Q r + beta/2 + (alpha - 1) theta^T P theta
//            + alpha b^T P b / 2 - alpha b^T P theta) / (1 - alpha)
// The result is rejected unless the Bellman residual is below 1e-8 on 1000
// random states.
inline ValueFunction synthesize(const ProblemSpec& spec) {
  const Matrix& a = spec.model.A;
  const Vector& b = spec.model.b;
  const double alpha = spec.alpha;
  const Eigen::Index n = a.rows();

  Matrix p = solve_discounted_lyapunov(a, spec.Q, alpha);
  Eigen::LLT<Matrix> llt(p);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("synthesize: P is not positive definite (is (A, Q) observable?)");
  }
  const Vector rhs = spec.Q * spec.r - 0.5 * alpha * (a.transpose() * (p * b));
  const Matrix shift = Matrix::Identity(n, n) - alpha * a.transpose();
  const Vector theta = solve_linear(p, solve_linear(shift, rhs));

  const double pb_b = b.dot(p * b);
  const double pth_th = theta.dot(p * theta);
  const double pth_b = b.dot(p * theta);
  const double rqr = spec.r.dot(spec.Q * spec.r);
  const double v = (rqr + 0.5 * spec.beta + (alpha - 1.0) * pth_th + 0.5 * alpha * pb_b - alpha * pth_b) /
                   (1.0 - alpha);

  ValueFunction V{std::move(p), theta, v};
  // 1e-8 absolute, unless v is so large that rounding in V alone exceeds it.
  const double tol = std::max(1e-8, 256.0 * std::numeric_limits<double>::epsilon() * std::abs(v));
  const double residual = max_bellman_residual(spec, V);
  if (!(residual < tol)) {
    throw NumericError("synthesize: Bellman residual " + std::to_string(residual) + " exceeds " +
                       std::to_string(tol));
  }
  return V;
}

struct AffinePolicy {
  Vector delta;
  double zeta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  double f(const Vector& x) const { return delta.dot(x) + zeta; }
};

// Exact expansion of f(x) = V(Ax + b) - V(Ax) under the quadratic V:
//   f(x) = x^T (2 A^T P b) + (b^T P b - 2 theta^T P b).
inline AffinePolicy affine_coeffs(const ValueFunction& V, const ProblemSpec& spec) {
  const Matrix& a = spec.model.A;
  const Vector& b = spec.model.b;
  const Vector pb = V.P * b;
  AffinePolicy pol{2.0 * a.transpose() * pb, b.dot(pb) - 2.0 * V.theta.dot(pb), spec.alpha, spec.beta};

  Rng rng(kCheckSeed + 1);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = rng.uniform_vector(a.rows(), -kStateBox, kStateBox);
    const double gap = std::abs(f_direct(V, spec.model, x) - pol.f(x));
    if (!(gap < 1e-10)) {
      throw NumericError("affine_coeffs: affine form deviates from f by " + std::to_string(gap));
    }
  }
  return pol;
}

struct LiteralCoeffs {
  Vector delta;
  double zeta = 0.0;
};

// The coefficient formulas as originally typeset:
//   delta' = -2 A^T P theta,  zeta' = theta^T P theta - 2 b^T P theta.
// Reporting only; these do not reproduce f and are never used to switch.
inline LiteralCoeffs printed_coeffs(const ValueFunction& V, const SystemModel& model) {
  const Vector pth = V.P * V.theta;
  return {-2.0 * model.A.transpose() * pth, V.theta.dot(pth) - 2.0 * model.b.dot(pth)};
}

// u = 1 iff f(x) <= (beta / alpha)(2z - 1); ties switch on.
inline Switch policy(const AffinePolicy& pol, const Vector& x, Switch z) {
  const double threshold = (pol.beta / pol.alpha) * (2 * to_int(z) - 1);
  return pol.f(x) <= threshold ? Switch::On : Switch::Off;
}

// Two-branch argmin of the Bellman minimization with q(x) dropped:
//   off: beta z       + alpha V(Ax)
//   on:  beta (1 - z) + alpha V(Ax + b)
inline Switch policy_direct(const ValueFunction& V, const ProblemSpec& spec, const Vector& x, Switch z) {
  const Vector ax = spec.model.A * x;
  const int zi = to_int(z);
  const double off = spec.beta * zi + spec.alpha * value_eval(V, ax);
  const double on = spec.beta * (1 - zi) + spec.alpha * value_eval(V, ax + spec.model.b);
  return on <= off ? Switch::On : Switch::Off;
}

inline double modified_stage_cost(const ProblemSpec& spec, const ValueFunction& V, const Vector& x, Switch z) {
  const double f = f_direct(V, spec.model, x);
  return quadratic_distance(spec, x) + 0.5 * std::abs(spec.beta + (1 - 2 * to_int(z)) * spec.alpha * f);
}

// Everything the CLI reports about one synthesis.
struct Gains {
  ValueFunction V;
  AffinePolicy policy;
  LiteralCoeffs literal;
  double bellman_residual_max = 0.0;
  double literal_max_deviation = 0.0;  // max |f - (delta'^T x + zeta')| over the check box
};

inline Gains synthesize_gains(const ProblemSpec& spec) {
  Gains g;
  g.V = synthesize(spec);
  g.policy = affine_coeffs(g.V, spec);
  g.literal = printed_coeffs(g.V, spec.model);
  g.bellman_residual_max = max_bellman_residual(spec, g.V);
  Rng rng(kCheckSeed + 2);
  for (int i = 0; i < 1000; ++i) {
    const Vector x = rng.uniform_vector(spec.model.n(), -kStateBox, kStateBox);
    const double lit = g.literal.delta.dot(x) + g.literal.zeta;
    g.literal_max_deviation = std::max(g.literal_max_deviation, std::abs(f_direct(g.V, spec.model, x) - lit));
  }
  return g;
}

}  // namespace switchstate
