#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <iosfwd>

#include "qutrit.hpp"
#include "rng.hpp"

namespace qleak {

// Rows index the prepared state, columns the measured state.
struct ConfusionMatrix {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();

  void validate() const;  // rows sum to 1 +- 1e-6, entries in [0,1], invertible

  // The matrix reported in the experiment's supplement.
  static ConfusionMatrix paper();
};

// Gaussian IQ clouds, one per state.
struct IQModel {
  std::array<std::complex<double>, 3> centers;
  std::array<double, 3> stds;
  double readout_duration_us = 1.0;

  void validate() const;

  // Equilateral clouds with a pairwise separation error of 1e-4
  // (separation / (2 std) = 3.719), matching the quoted cloud overlap.
  static IQModel defaults();
};

// measured = true_probs (row vector) * M
Eigen::Vector3d apply_confusion(const Eigen::Vector3d& true_probs, const ConfusionMatrix& m);

struct VisibilityCorrection {
  Eigen::Vector3d probs;
  bool clipped = false;  // negative components were clipped and renormalized
};
VisibilityCorrection correct_visibility(const Eigen::Vector3d& measured,
                                        const ConfusionMatrix& m);

struct ReadoutSample {
  int label = 0;
  std::complex<double> iq;
};

// Evolves populations through the readout window (decay/heating only), draws
// the terminal state, draws an IQ point from its cloud, and classifies by
// standardized distance |z - center| / std.
ReadoutSample simulate_readout(const DensityMatrix& rho, const IQModel& iq,
                               const NoiseParams& noise, RngStream& rng);

ConfusionMatrix estimate_confusion(const IQModel& iq, const NoiseParams& noise, int shots,
                                   RngStream& rng);

ConfusionMatrix read_confusion_csv(std::istream& is);
void write_confusion_csv(const ConfusionMatrix& m, std::ostream& os);

}  // namespace qleak
