#include "pulses.hpp"

#include <cmath>
#include <stdexcept>

#include "errors.hpp"

namespace qleak {

namespace {
const std::complex<double> kImag{0.0, 1.0};
}

ComplexEnvelope cosine_envelope(const PulseSpec& spec, double dt) {
  if (!(spec.duration_ns > 0.0)) {
    throw std::invalid_argument("cosine_envelope: duration must be positive");
  }
  if (!(dt > 0.0)) {
    throw std::invalid_argument("cosine_envelope: dt must be positive");
  }
  if (spec.peak_amplitude < 0.0) {
    throw std::invalid_argument("cosine_envelope: peak amplitude must be non-negative");
  }
  long long n = std::llround(spec.duration_ns / dt);
  if (n < 8) {
    throw std::invalid_argument("cosine_envelope: dt must divide the duration into >= 8 steps");
  }
  if (n % 2 != 0) ++n;  // even interval count for the 2-dt RK4 stepping

  ComplexEnvelope env;
  env.dt = spec.duration_ns / static_cast<double>(n);
  env.samples.resize(static_cast<size_t>(n) + 1);
  const double omega = kTwoPi / spec.duration_ns;
  const std::complex<double> amp =
      0.5 * spec.peak_amplitude * spec.sign * std::polar(1.0, spec.axis_phase);
  for (size_t k = 0; k < env.samples.size(); ++k) {
    const double t = static_cast<double>(k) * env.dt;
    env.samples[k] = amp * (1.0 - std::cos(omega * t));
  }
  env.samples.front() = 0.0;
  env.samples.back() = 0.0;
  env.cosine = CosineForm{amp, omega};
  return env;
}

ComplexEnvelope apply_drag(const ComplexEnvelope& env, double alpha1, double alpha2,
                           double delta_eff) {
  if ((alpha1 != 0.0 || alpha2 != 0.0) && delta_eff == 0.0) {
    throw std::invalid_argument("apply_drag: zero effective anharmonicity with nonzero DRAG weights");
  }
  ComplexEnvelope out;
  out.dt = env.dt;
  out.samples.resize(env.samples.size());
  const size_t n = env.samples.size();
  if (n == 0) return out;

  const double c1 = (delta_eff != 0.0) ? alpha1 / delta_eff : 0.0;
  const double c2 = (delta_eff != 0.0) ? alpha2 / (delta_eff * delta_eff) : 0.0;

  if (env.cosine) {
    // exact derivatives of amp (1 - cos(w t))
    const std::complex<double> amp = env.cosine->amp;
    const double w = env.cosine->omega;
    for (size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) * env.dt;
      const std::complex<double> d1 = amp * w * std::sin(w * t);
      const std::complex<double> d2 = amp * w * w * std::cos(w * t);
      out.samples[k] = env.samples[k] - kImag * c1 * d1 + c2 * d2;
    }
    return out;
  }

  // tabulated envelope: second-order finite differences
  if (n < 4) {
    throw std::invalid_argument("apply_drag: tabulated envelope needs at least 4 samples");
  }
  const double dt = env.dt;
  const auto& s = env.samples;
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> d1, d2;
    if (k == 0) {
      d1 = (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * dt);
      d2 = (2.0 * s[0] - 5.0 * s[1] + 4.0 * s[2] - s[3]) / (dt * dt);
    } else if (k == n - 1) {
      d1 = (3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * dt);
      d2 = (2.0 * s[n - 1] - 5.0 * s[n - 2] + 4.0 * s[n - 3] - s[n - 4]) / (dt * dt);
    } else {
      d1 = (s[k + 1] - s[k - 1]) / (2.0 * dt);
      d2 = (s[k + 1] - 2.0 * s[k] + s[k - 1]) / (dt * dt);
    }
    out.samples[k] = s[k] - kImag * c1 * d1 + c2 * d2;
  }
  return out;
}

ComplexEnvelope apply_detuning(const ComplexEnvelope& env, double detuning_mhz) {
  ComplexEnvelope out;
  out.dt = env.dt;
  out.samples.resize(env.samples.size());
  const double df_ghz = detuning_mhz * 1e-3;
  for (size_t k = 0; k < env.samples.size(); ++k) {
    const double t = static_cast<double>(k) * env.dt;
    out.samples[k] = env.samples[k] * std::polar(1.0, kTwoPi * df_ghz * t);
  }
  if (detuning_mhz == 0.0) out.cosine = env.cosine;
  return out;
}

std::complex<double> spectral_weight(const ComplexEnvelope& env, double omega) {
  const size_t n = env.samples.size();
  if (n < 2) return {0.0, 0.0};
  std::complex<double> acc{0.0, 0.0};
  for (size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * env.dt;
    const std::complex<double> term = env.samples[k] * std::polar(1.0, omega * t);
    acc += (k == 0 || k == n - 1) ? 0.5 * term : term;
  }
  return acc * env.dt;
}

ComplexEnvelope make_pulse(const PulseSpec& spec, double dt) {
  ComplexEnvelope env = cosine_envelope(spec, dt);
  if (spec.alpha1 != 0.0 || spec.alpha2 != 0.0) {
    env = apply_drag(env, spec.alpha1, spec.alpha2, spec.effective_anharmonicity());
  }
  if (spec.detuning_mhz != 0.0) {
    env = apply_detuning(env, -spec.detuning_mhz);
  }
  return env;
}

void write_envelope_csv(const ComplexEnvelope& env, std::ostream& os) {
  os << "t_ns,re,im\n";
  char buf[96];
  for (size_t k = 0; k < env.samples.size(); ++k) {
    const double t = static_cast<double>(k) * env.dt;
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", t, env.samples[k].real(),
                  env.samples[k].imag());
    os << buf;
  }
}

}  // namespace qleak
