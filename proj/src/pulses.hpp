#pragma once

#include <complex>
#include <optional>
#include <ostream>
#include <vector>

#include "units.hpp"

namespace qleak {

// Parametric description of one microwave pulse.
//
// Sign convention for detuning_mhz follows the experiment: the anharmonicity
// is negative, so a negative detuning moves the pulse carrier toward the
// 1<->2 transition and shrinks |effective_anharmonicity()|.
struct PulseSpec {
  double duration_ns = 10.0;
  double peak_amplitude = 0.0;  // peak Rabi rate, rad/ns
  double axis_phase = 0.0;      // rad; 0 = X, pi/2 = Y
  double sign = 1.0;            // +1 or -1 (rotation direction)
  double alpha1 = 0.0;          // first-derivative DRAG weight
  double alpha2 = 0.0;          // second-derivative DRAG weight
  double detuning_mhz = 0.0;    // constant pulse detuning, MHz
  double anharmonicity = 0.0;   // bare Delta = w21 - w10, rad/ns

  // Delta_eff = Delta - 2pi df: the frequency at which DRAG must remove
  // spectral weight once the carrier is shifted by df.
  double effective_anharmonicity() const {
    return anharmonicity - mhz_to_radns(detuning_mhz);
  }
};

// Closed form of a base cosine envelope: amp * (1 - cos(omega t)).
// Kept alongside the samples so DRAG derivatives can be taken exactly.
struct CosineForm {
  std::complex<double> amp;
  double omega;
};

struct ComplexEnvelope {
  double dt = 0.0;                           // sample spacing, ns
  std::vector<std::complex<double>> samples;  // rad/ns
  std::optional<CosineForm> cosine;

  double duration() const {
    return samples.size() < 2 ? 0.0 : dt * static_cast<double>(samples.size() - 1);
  }
};

// Default sample spacing. 0.02 ns fails the integrator's step-halving
// convergence bound by ~3x and 0.01 ns leaves ~2e-9 eigenvalue negativity
// after a pi pulse; 0.005 ns keeps both inside the density-matrix tolerances
// with an order of magnitude to spare.
inline constexpr double kDefaultDt = 0.005;

// Base cosine envelope A (1 - cos(2 pi t / T)) / 2 * exp(i phase) * sign.
// The sample count is forced even so the integrator can take RK4 steps of
// 2 dt using midpoint samples.
ComplexEnvelope cosine_envelope(const PulseSpec& spec, double dt = kDefaultDt);

// out = env - i (alpha1/delta_eff) d(env)/dt + (alpha2/delta_eff^2) d2(env)/dt2.
// Uses the closed cosine form when present, otherwise second-order finite
// differences (central inside, one-sided at the ends).
ComplexEnvelope apply_drag(const ComplexEnvelope& env, double alpha1, double alpha2,
                           double delta_eff);

// out[k] = env[k] * exp(2 pi i df t_k), t measured from the pulse start.
ComplexEnvelope apply_detuning(const ComplexEnvelope& env, double detuning_mhz);

// Trapezoidal quadrature of env(t) exp(i omega t) dt.
std::complex<double> spectral_weight(const ComplexEnvelope& env, double omega);

// Full pipeline for one physical pulse: cosine base, DRAG against
// Delta_eff, then the carrier phase ramp. The Hamiltonian puts the envelope
// on the raising operators, where a carrier shifted by +df appears as a
// phase ramp at -df; apply_detuning is therefore called with the negated
// user detuning.
ComplexEnvelope make_pulse(const PulseSpec& spec, double dt = kDefaultDt);

// CSV dump: t_ns, re, im
void write_envelope_csv(const ComplexEnvelope& env, std::ostream& os);

}  // namespace qleak
