#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cliffords.hpp"
#include "qutrit.hpp"

namespace qleak {

struct CalibrationResult {
  double pi_amplitude = 0.0;
  double half_pi_amplitude = 0.0;
  double detuning_mhz = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double r_clifford = 0.0;  // objective at the accepted optimum
  bool detuning_flat = false;
  std::vector<std::pair<Eigen::VectorXd, double>> objective_history;
};

// pi and pi/2 amplitudes maximizing P1 after one pi pulse / two pi/2 pulses
// from |0>, refined to relative tolerance 1e-5.
std::pair<double, double> calibrate_amplitude(const GateParams& gp, const NoiseParams& noise,
                                              const SystemParams& sys);

struct DetuningResult {
  double detuning_mhz = 0.0;
  bool flat = false;
};

// Pseudo-identity detuning sweep: a single-application coarse scan finds the
// broad optimum (repeated applications alias), then repeated applications
// sharpen it by parabolic refinement. The same detuning serves pi and pi/2
// pulses.
DetuningResult calibrate_detuning(const GateParams& gp, int reps, const NoiseParams& noise,
                                  const SystemParams& sys);

struct NelderMeadOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;  // simplex diameter
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::pair<Eigen::VectorXd, double>> history;  // accepted best per iteration
};

// Simplex search with reflection/expansion/contraction/shrink coefficients
// 1, 2, 1/2, 1/2. Never returns a point worse than x0.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& scale,
                             const NelderMeadOptions& options = {});

struct RBBudget {
  std::vector<int> lengths{30, 100, 300};
  int num_sequences = 20;
  uint64_t seed = 20151013;
  int nm_max_iterations = 40;
  double nm_tolerance = 1e-7;
  int threads = 1;
};

// Full tune-up at fixed DRAG weights: amplitude cal, detuning cal, amplitude
// recal, then Nelder-Mead over (pi amp, pi/2 amp, detuning) minimizing the
// fitted RB error on a fixed-seed simulated estimate.
CalibrationResult tune_gate(double alpha1, double alpha2, const GateParams& base,
                            const RBBudget& budget, const NoiseParams& noise,
                            const SystemParams& sys);

}  // namespace qleak
