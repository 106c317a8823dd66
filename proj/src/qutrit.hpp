#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>

#include "pulses.hpp"
#include "units.hpp"

namespace qleak {

using Mat3 = Eigen::Matrix3cd;
using Superop = Eigen::Matrix<std::complex<double>, 9, 9>;

// Incoherent channel parameters. Non-positive or infinite times and zero
// rates switch the corresponding channel off.
struct NoiseParams {
  double t1_10_us = kInf;       // |1> -> |0> decay time
  double t1_21_us = kInf;       // |2> -> |1> decay time
  double heat_12_per_ms = 0.0;  // |1> -> |2> heating rate
  double heat_01_per_ms = 0.0;  // |0> -> |1> heating rate
  double tphi1_us = kInf;       // exponential (Markovian) dephasing time
  double tphi2_us = kInf;       // Gaussian dephasing time, quasi-static model
  double deph2_scale = 2.0;     // |2> dephasing weight relative to |1>

  void validate() const;
  bool quasistatic_enabled() const { return tphi2_us > 0.0 && tphi2_us < kInf; }
  // std dev of the per-sequence frequency offset, rad/ns
  double quasistatic_sigma() const;
};

struct SystemParams {
  double anharmonicity = mhz_to_radns(-212.0);  // bare Delta, rad/ns
  double relative_12_coupling = std::numbers::sqrt2;
  // per-sequence quasi-static frequency offset, rad/ns; adds
  // offset * (|1><1| + 2 |2><2|) to the Hamiltonian
  double quasistatic_offset = 0.0;

  void validate() const;
};

class DensityMatrix {
 public:
  DensityMatrix() : m_(Mat3::Zero()) { m_(0, 0) = 1.0; }
  explicit DensityMatrix(const Mat3& m) : m_(m) {}
  static DensityMatrix basis(int level);

  Mat3& mat() { return m_; }
  const Mat3& mat() const { return m_; }

  double purity() const { return (m_ * m_).trace().real(); }
  // Hermitian to 1e-10, trace 1 +- 1e-9, eigenvalues >= -1e-9.
  void validate(const char* context) const;

 private:
  Mat3 m_;
};

std::array<double, 3> populations(const DensityMatrix& rho);

// H = Delta |2><2| + offset (|1><1| + 2|2><2|)
//     + 1/2 [omega (|1><0| + r |2><1|) + h.c.]
Mat3 drive_hamiltonian(std::complex<double> omega, const SystemParams& sys);

// Lindblad master equation with piecewise-sampled drive; envelope samples sit
// on a half grid and RK4 steps span 2 dt (sample count must be odd).
DensityMatrix propagate(const DensityMatrix& rho, const ComplexEnvelope& env,
                        const NoiseParams& noise, const SystemParams& sys);

// Drive-free evolution via the exact exponential of the (time-independent)
// generator; valid for arbitrarily long durations.
DensityMatrix idle(const DensityMatrix& rho, double duration_ns, const NoiseParams& noise,
                   const SystemParams& sys);
DensityMatrix idle(const DensityMatrix& rho, double duration_ns, const NoiseParams& noise);

// Linear map of one pulse acting on vec(rho) (column-major), built by
// propagating the nine matrix units. Lets a sequence apply each distinct
// pulse as a single 9x9 matvec.
Superop pulse_superoperator(const ComplexEnvelope& env, const NoiseParams& noise,
                            const SystemParams& sys);
DensityMatrix apply_superoperator(const Superop& map, const DensityMatrix& rho);

// Population-sector rate matrix d p / dt = R p (1/ns), used for readout
// windows and closed-form relaxation checks.
Eigen::Matrix3d population_rate_matrix(const NoiseParams& noise);

}  // namespace qleak
