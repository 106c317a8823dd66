#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "pulses.hpp"
#include "units.hpp"

using namespace qleak;

namespace {

PulseSpec pi_spec(double duration = 10.0) {
  PulseSpec spec;
  spec.duration_ns = duration;
  spec.peak_amplitude = kTwoPi / duration;  // rotation angle A T / 2 = pi
  spec.anharmonicity = mhz_to_radns(-212.0);
  return spec;
}

// fine grid for quadrature-sensitive checks
constexpr double kFineDt = 5e-4;

}  // namespace

TEST_CASE("cosine envelope boundary and peak values") {
  const PulseSpec spec = pi_spec();
  const ComplexEnvelope env = cosine_envelope(spec, 0.01);

  CHECK(env.samples.front() == std::complex<double>(0.0, 0.0));
  CHECK(env.samples.back() == std::complex<double>(0.0, 0.0));
  CHECK(env.duration() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(env.samples.size() % 2 == 1);

  const size_t mid = env.samples.size() / 2;
  CHECK(env.samples[mid].real() == doctest::Approx(spec.peak_amplitude).epsilon(1e-10));
  CHECK(env.samples[mid].imag() == doctest::Approx(0.0));

  // rotation angle = integral |omega| dt = A T / 2
  const std::complex<double> area = spectral_weight(env, 0.0);
  CHECK(std::abs(area) == doctest::Approx(kPi).epsilon(1e-8));
}

TEST_CASE("cosine envelope axis phase and sign") {
  PulseSpec spec = pi_spec();
  spec.axis_phase = 0.5 * kPi;
  spec.sign = -1.0;
  const ComplexEnvelope env = cosine_envelope(spec, 0.01);
  const size_t mid = env.samples.size() / 2;
  // -1 * e^{i pi/2} = -i
  CHECK(env.samples[mid].real() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(env.samples[mid].imag() == doctest::Approx(-spec.peak_amplitude).epsilon(1e-10));
}

TEST_CASE("cosine envelope rejects bad arguments") {
  PulseSpec spec = pi_spec();
  spec.duration_ns = 0.0;
  CHECK_THROWS_AS(cosine_envelope(spec, 0.01), std::invalid_argument);
  spec.duration_ns = -1.0;
  CHECK_THROWS_AS(cosine_envelope(spec, 0.01), std::invalid_argument);
  spec = pi_spec();
  CHECK_THROWS_AS(cosine_envelope(spec, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(cosine_envelope(spec, 2.0), std::invalid_argument);  // < 8 steps
}

TEST_CASE("apply_drag identity when weights vanish") {
  const ComplexEnvelope env = cosine_envelope(pi_spec(), 0.01);
  const ComplexEnvelope out = apply_drag(env, 0.0, 0.0, mhz_to_radns(-212.0));
  for (size_t k = 0; k < env.samples.size(); ++k) {
    CHECK(std::abs(out.samples[k] - env.samples[k]) == doctest::Approx(0.0));
  }
}

TEST_CASE("apply_drag quadrature vanishes at the pulse peak") {
  const ComplexEnvelope env = cosine_envelope(pi_spec(), 0.01);
  const ComplexEnvelope out = apply_drag(env, 1.0, 0.0, mhz_to_radns(-212.0));
  const size_t mid = out.samples.size() / 2;
  CHECK(out.samples[mid].imag() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("apply_drag requires nonzero divisor") {
  const ComplexEnvelope env = cosine_envelope(pi_spec(), 0.01);
  CHECK_THROWS_AS(apply_drag(env, 1.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(apply_drag(env, 0.0, 0.5, 0.0), std::invalid_argument);
  CHECK_NOTHROW(apply_drag(env, 0.0, 0.0, 0.0));
}

TEST_CASE("DRAG spectral nulling factor (1 - a1 - a2)") {
  const double delta = mhz_to_radns(-212.0);
  for (double duration : {5.0, 10.0, 23.7, 50.0}) {
    const ComplexEnvelope env = cosine_envelope(pi_spec(duration), kFineDt);
    const double base_at_zero = std::abs(spectral_weight(env, 0.0));
    const double base_at_delta = std::abs(spectral_weight(env, delta));

    // full cancellation at a1 + a2 = 1
    for (auto [a1, a2] : {std::pair{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}, {1.5, -0.5}}) {
      const ComplexEnvelope dragged = apply_drag(env, a1, a2, delta);
      CHECK(std::abs(spectral_weight(dragged, delta)) / base_at_zero < 1e-8);
    }
    // linear scaling elsewhere
    for (auto [a1, a2] : {std::pair{0.5, 0.0}, {0.3, 0.2}, {0.0, 0.7}, {1.2, 0.0}}) {
      const ComplexEnvelope dragged = apply_drag(env, a1, a2, delta);
      const double ratio = std::abs(spectral_weight(dragged, delta)) / base_at_delta;
      CHECK(ratio == doctest::Approx(std::abs(1.0 - a1 - a2)).epsilon(1e-6));
    }
  }
}

TEST_CASE("finite-difference DRAG matches the analytic path") {
  const double delta = mhz_to_radns(-212.0);
  ComplexEnvelope env = cosine_envelope(pi_spec(), 0.002);
  ComplexEnvelope tabulated = env;
  tabulated.cosine.reset();
  const ComplexEnvelope exact = apply_drag(env, 1.0, 0.4, delta);
  const ComplexEnvelope fd = apply_drag(tabulated, 1.0, 0.4, delta);
  double worst = 0.0;
  for (size_t k = 0; k < exact.samples.size(); ++k) {
    worst = std::max(worst, std::abs(exact.samples[k] - fd.samples[k]));
  }
  CHECK(worst < 1e-5);  // O(dt^2) difference
}

TEST_CASE("apply_detuning phase ramp") {
  PulseSpec spec = pi_spec(50.0 / 3.0);
  const ComplexEnvelope env = cosine_envelope(spec, spec.duration_ns / 1000.0);

  SUBCASE("zero detuning is the identity") {
    const ComplexEnvelope out = apply_detuning(env, 0.0);
    for (size_t k = 0; k < env.samples.size(); ++k) {
      CHECK(out.samples[k] == env.samples[k]);
    }
  }
  SUBCASE("-30 MHz at t = 16.667 ns gives phase -1") {
    const ComplexEnvelope out = apply_detuning(env, -30.0);
    // last sample sits at t = 50/3 ns where 2 pi df t = -pi; compare against
    // an interior sample to avoid the zero boundary
    const size_t k = env.samples.size() - 1 - env.samples.size() / 4;
    const double t = static_cast<double>(k) * env.dt;
    const std::complex<double> expected =
        env.samples[k] * std::polar(1.0, kTwoPi * (-30e-3) * t);
    CHECK(std::abs(out.samples[k] - expected) < 1e-12);
    const std::complex<double> ratio_phase = std::polar(1.0, kTwoPi * (-30e-3) * env.duration());
    CHECK(ratio_phase.real() == doctest::Approx(-1.0).epsilon(1e-9));
  }
  SUBCASE("magnitudes preserved") {
    const ComplexEnvelope out = apply_detuning(env, -30.0);
    for (size_t k = 0; k < env.samples.size(); ++k) {
      CHECK(std::abs(out.samples[k]) == doctest::Approx(std::abs(env.samples[k])).epsilon(1e-12));
    }
  }
}

TEST_CASE("transform order matters for detuned DRAG") {
  // DRAG must be computed against Delta_eff before the phase ramp; the
  // swapped order produces a different waveform
  PulseSpec spec = pi_spec();
  spec.alpha1 = 1.0;
  spec.detuning_mhz = -30.0;
  const double delta_eff = spec.effective_anharmonicity();
  const ComplexEnvelope base = cosine_envelope(spec, 0.01);

  const ComplexEnvelope correct = apply_detuning(apply_drag(base, 1.0, 0.0, delta_eff), -30.0);
  ComplexEnvelope detuned_first = apply_detuning(base, -30.0);
  detuned_first.cosine.reset();  // no longer of cosine form
  const ComplexEnvelope swapped = apply_drag(detuned_first, 1.0, 0.0, delta_eff);

  double worst = 0.0;
  for (size_t k = 0; k < correct.samples.size(); ++k) {
    worst = std::max(worst, std::abs(correct.samples[k] - swapped.samples[k]));
  }
  CHECK(worst > 1e-3);
}

TEST_CASE("transforms are linear in the envelope") {
  const double delta = mhz_to_radns(-212.0);
  PulseSpec spec = pi_spec();
  const ComplexEnvelope env = cosine_envelope(spec, 0.01);
  PulseSpec scaled_spec = spec;
  scaled_spec.peak_amplitude *= 2.5;
  const ComplexEnvelope scaled = cosine_envelope(scaled_spec, 0.01);

  const ComplexEnvelope a = apply_drag(env, 0.7, 0.2, delta);
  const ComplexEnvelope b = apply_drag(scaled, 0.7, 0.2, delta);
  for (size_t k = 0; k < a.samples.size(); k += 37) {
    CHECK(std::abs(2.5 * a.samples[k] - b.samples[k]) < 1e-12);
  }
  CHECK(std::abs(2.5 * spectral_weight(a, delta) - spectral_weight(b, delta)) < 1e-10);
}

TEST_CASE("spectral_weight at the effective anharmonicity scales with 1 - a1") {
  const double delta = mhz_to_radns(-212.0);
  const ComplexEnvelope env = cosine_envelope(pi_spec(), kFineDt);
  const ComplexEnvelope half = apply_drag(env, 0.5, 0.0, delta);
  const double ratio = std::abs(spectral_weight(half, delta)) /
                       std::abs(spectral_weight(env, delta));
  CHECK(ratio == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("make_pulse pipeline composes the three transforms") {
  PulseSpec spec = pi_spec();
  spec.alpha1 = 1.0;
  spec.alpha2 = -0.2;
  spec.detuning_mhz = -25.0;
  const ComplexEnvelope pulse = make_pulse(spec, 0.01);

  const ComplexEnvelope expected = apply_detuning(
      apply_drag(cosine_envelope(spec, 0.01), spec.alpha1, spec.alpha2,
                 spec.effective_anharmonicity()),
      -spec.detuning_mhz);  // raising-operator convention: conjugate ramp
  REQUIRE(pulse.samples.size() == expected.samples.size());
  for (size_t k = 0; k < pulse.samples.size(); k += 11) {
    CHECK(std::abs(pulse.samples[k] - expected.samples[k]) < 1e-14);
  }
}

TEST_CASE("effective anharmonicity shrinks toward the 1<->2 transition") {
  PulseSpec spec = pi_spec();
  spec.detuning_mhz = -30.0;
  CHECK(spec.effective_anharmonicity() == doctest::Approx(mhz_to_radns(-182.0)));
}

TEST_CASE("envelope CSV dump") {
  const ComplexEnvelope env = cosine_envelope(pi_spec(), 1.0);
  std::ostringstream os;
  write_envelope_csv(env, os);
  const std::string text = os.str();
  CHECK(text.rfind("t_ns,re,im\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 11);  // header + samples
}
