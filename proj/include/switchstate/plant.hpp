#pragma once

// Buck (step-down) converter model with an ideal two-position switch.
//
// State ordering is (v_c, i_l): capacitor voltage, inductor current.
//
//        [ -1/(R C)   1/C    ]        [   0   ]
//  A_c = [                   ],  b_c = [       ]
//        [  -1/L    -r_l/L   ]        [ V_s/L ]
//
// Controller synthesis and simulation run in per-unit coordinates; SI values
// only appear at the edges.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "switchstate/errors.hpp"
#include "switchstate/linalg.hpp"

namespace switchstate {

enum class UnitSystem { SI, PerUnit };

struct ConverterParams {
  double L = 0.0;    // inductance [H or p.u.]
  double C = 0.0;    // capacitance [F or p.u.]
  double r_l = 0.0;  // inductor series loss [ohm or p.u.]
  double R = 0.0;    // load [ohm or p.u.]
  double V_s = 0.0;  // source voltage [V or p.u.]
  UnitSystem units = UnitSystem::PerUnit;

  bool operator==(const ConverterParams&) const = default;
};

struct PerUnitBases {
  double V_base = 1.0;      // volt
  double Z_base = 1.0;      // ohm
  double omega_base = 1.0;  // rad/s

  double I_base() const { return V_base / Z_base; }
};

// Angular base that reconciles both the L and C rows of the reference
// parameter table: 2*pi*40 kHz.
inline constexpr double kDefaultOmegaBase = 2.0 * std::numbers::pi * 40000.0;

// Reference converter, SI column.
inline ConverterParams reference_si() { return {1e-3, 220e-6, 1.5, 9.0, 20.0, UnitSystem::SI}; }

// Reference converter, per-unit column exactly as tabulated.
inline ConverterParams reference_pu() { return {27.9, 497.0, 0.17, 1.0, 1.0, UnitSystem::PerUnit}; }

inline PerUnitBases reference_bases() { return {20.0, 9.0, kDefaultOmegaBase}; }

// Throws ParameterError on a non-positive component (r_l may be zero).
// Returns human-readable warnings for parameter sets that are legal but odd.
inline std::vector<std::string> validate(const ConverterParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ParameterError(std::string("converter parameter ") + name +
                           " must be positive and finite, got " + std::to_string(v));
    }
  };
  positive(p.L, "L");
  positive(p.C, "C");
  positive(p.R, "R");
  positive(p.V_s, "V_s");
  if (!(p.r_l >= 0.0) || !std::isfinite(p.r_l)) {
    throw ParameterError("converter parameter r_l must be non-negative, got " +
                         std::to_string(p.r_l));
  }
  std::vector<std::string> warnings;
  if (p.r_l >= p.R) warnings.emplace_back("r_l >= R: inductor loss dominates the load");
  return warnings;
}

inline void validate(const PerUnitBases& b) {
  if (!(b.V_base > 0.0) || !(b.Z_base > 0.0) || !(b.omega_base > 0.0)) {
    throw ParameterError("per-unit bases must all be positive");
  }
}

// Which sign the (2,1) entry of A_c carries. Physical is -1/L (Kirchhoff's
// voltage law around the inductor loop). AsPrinted is the +1/L variant,
// kept only so the discrepancy can be reproduced; it always yields a saddle.
enum class SignConvention { Physical, AsPrinted };

struct ContinuousModel {
  Matrix A_c;
  Vector b_c;
};

inline ContinuousModel build_continuous(const ConverterParams& p,
                                        SignConvention sign = SignConvention::Physical) {
  validate(p);
  Matrix a(2, 2);
  const double coupling = sign == SignConvention::Physical ? -1.0 / p.L : 1.0 / p.L;
  a << -1.0 / (p.R * p.C), 1.0 / p.C,
       coupling, -p.r_l / p.L;
  Vector b(2);
  b << 0.0, p.V_s / p.L;

  const double tr = a.trace();
  const double det = a.determinant();
  if (!(tr < 0.0 && det > 0.0)) {
    throw StabilityError("continuous buck model is not Hurwitz (trace = " + std::to_string(tr) +
                         ", det = " + std::to_string(det) + ")");
  }
  return {a, b};
}

inline ConverterParams to_per_unit(const ConverterParams& si, const PerUnitBases& bases) {
  if (si.units != UnitSystem::SI) throw ParameterError("to_per_unit: parameters are not in SI");
  validate(si);
  validate(bases);
  return {bases.omega_base * si.L / bases.Z_base,
          bases.omega_base * si.C * bases.Z_base,
          si.r_l / bases.Z_base,
          si.R / bases.Z_base,
          si.V_s / bases.V_base,
          UnitSystem::PerUnit};
}

inline ConverterParams from_per_unit(const ConverterParams& pu, const PerUnitBases& bases) {
  if (pu.units != UnitSystem::PerUnit) throw ParameterError("from_per_unit: parameters are not p.u.");
  validate(pu);
  validate(bases);
  return {pu.L * bases.Z_base / bases.omega_base,
          pu.C / (bases.omega_base * bases.Z_base),
          pu.r_l * bases.Z_base,
          pu.R * bases.Z_base,
          pu.V_s * bases.V_base,
          UnitSystem::SI};
}

// Where a discretized model came from, so a simulator can rebuild the plant
// after a load change.
struct PlantSource {
  ConverterParams params;  // per-unit
  double f_s = 0.0;        // Hz
  double omega_base = kDefaultOmegaBase;
  SignConvention sign = SignConvention::Physical;
};

struct SystemModel {
  Matrix A;
  Vector b;
  double T = 0.0;     // seconds per step, for time axes
  double T_pu = 0.0;  // per-unit step used by the discretization
  std::optional<PlantSource> source;

  Eigen::Index n() const { return A.rows(); }
};

// Wraps a bare (A, b) pair. Used for non-buck systems and tests.
inline SystemModel make_model(Matrix a, Vector b, double t_seconds = 1.0) {
  require_square(a, "A");
  if (b.size() != a.rows()) throw DimensionError("make_model: b size mismatch");
  require_finite(a, "A");
  require_finite(b, "b");
  return {std::move(a), std::move(b), t_seconds, t_seconds, std::nullopt};
}

inline SystemModel discretize_plant(const ConverterParams& pu, double f_s,
                                    double omega_base = kDefaultOmegaBase,
                                    SignConvention sign = SignConvention::Physical) {
  if (pu.units != UnitSystem::PerUnit) throw ParameterError("discretize_plant expects p.u. parameters");
  if (!(f_s > 0.0) || !std::isfinite(f_s)) throw ParameterError("switching frequency must be positive");
  if (!(omega_base > 0.0)) throw ParameterError("omega_base must be positive");
  const ContinuousModel cm = build_continuous(pu, sign);
  const double t_pu = omega_base / f_s;
  auto [a, b] = zoh_discretize(cm.A_c, cm.b_c, t_pu);
  const double rho = spectral_radius(a);
  if (!(rho < 1.0)) {
    throw StabilityError("discretized plant has spectral radius " + std::to_string(rho) + " >= 1");
  }
  return {std::move(a), std::move(b), 1.0 / f_s, t_pu, PlantSource{pu, f_s, omega_base, sign}};
}

// Same discretization carried out in SI units (A_c in 1/s, T in seconds).
// Used to cross-check the per-unit path.
inline DiscretePair discretize_si(const ConverterParams& si, double f_s) {
  if (si.units != UnitSystem::SI) throw ParameterError("discretize_si expects SI parameters");
  const ContinuousModel cm = build_continuous(si);
  return zoh_discretize(cm.A_c, cm.b_c, 1.0 / f_s);
}

inline ConverterParams with_load_scale(ConverterParams p, double factor) {
  if (!(factor > 0.0)) throw ParameterError("load scale factor must be positive");
  p.R *= factor;
  return p;
}

}  // namespace switchstate
