#pragma once

#include <limits>
#include <numbers>

// Unit conventions: time in ns, angular frequencies in rad/ns internally.
// User-facing frequencies are in MHz (detunings) or MHz/2pi-free (anharmonicity
// is quoted as 2pi x MHz in the literature and stored here in rad/ns).

namespace qleak {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// plain frequency in MHz -> angular frequency in rad/ns
inline constexpr double mhz_to_radns(double mhz) { return kTwoPi * mhz * 1e-3; }
inline constexpr double radns_to_mhz(double w) { return w * 1e3 / kTwoPi; }

inline constexpr double us_to_ns(double us) { return us * 1e3; }
inline constexpr double ms_to_ns(double ms) { return ms * 1e6; }

// decay time in us -> rate in 1/ns (infinite or non-positive time = channel off)
inline constexpr double rate_from_time_us(double t_us) {
  return (t_us > 0.0 && t_us < kInf) ? 1.0 / us_to_ns(t_us) : 0.0;
}
// rate in 1/ms -> rate in 1/ns
inline constexpr double rate_per_ms_to_per_ns(double r) { return r * 1e-6; }

}  // namespace qleak
