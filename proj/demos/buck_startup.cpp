// Startup of the reference buck converter using the library API directly.
//
//   buck_startup [beta] [steps]
//
// Prints the synthesized gains, then every 100th trace row and the run metrics.

#include <cstdlib>
#include <iomanip>
#include <iostream>

#include "switchstate/switchstate.hpp"

using namespace switchstate;

int main(int argc, char** argv) {
  const double beta = argc > 1 ? std::atof(argv[1]) : 10.0;
  const std::size_t steps = argc > 2 ? static_cast<std::size_t>(std::atol(argv[2])) : 1600;
  const double alpha = 0.9999;
  const double vref = 0.4;

  try {
    SystemModel model = discretize_plant(reference_pu(), 20e3);
    Vector h(2);
    h << 1.0, 0.0;
    const auto [Q, r] = regulation_targets(h, vref);
    const ProblemSpec spec = make_problem(model, Q, r, alpha, beta, {.allow_degenerate = beta == 0.0});
    const ValueFunction V = synthesize(spec);
    const AffinePolicy pol = affine_coeffs(V, spec);

    std::cout << std::setprecision(6);
    std::cout << "rho(A) = " << spectral_radius(model.A) << "\n";
    std::cout << "delta  = [" << pol.delta.transpose() << "], zeta = " << pol.zeta << "\n";
    std::cout << "switch-on threshold (z=0) = " << -beta / alpha << ", hold-on threshold (z=1) = " << beta / alpha
              << "\n\n";

    const Trace trace = run(model, pol, spec, {steps, Vector::Zero(2), Switch::Off, {}, 0.0, 1});
    std::cout << "  t [ms]       v_c       i_l  u\n";
    for (std::size_t k = 0; k < trace.rows.size(); k += 100) {
      const TraceRow& row = trace.rows[k];
      std::cout << std::setw(8) << row.t * 1e3 << std::setw(10) << row.v << std::setw(10) << row.i << "  "
                << to_int(row.u) << "\n";
    }
    if (trace.rows.empty()) return 0;
    const Metrics m = metrics(trace, alpha, vref);
    std::cout << "\nswitches " << m.switch_count << ", mean f_sw " << m.mean_switching_frequency << " Hz, ripple "
              << m.ripple_pp << " p.u., settled: "
              << (m.settling_time ? std::to_string(*m.settling_time * 1e3) + " ms" : std::string("no")) << "\n";
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
