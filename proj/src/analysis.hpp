#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "rng.hpp"

namespace qleak {

// Per-Clifford leakage (gamma_up) and seepage (gamma_down) rates plus the
// initial |2> population of the rate-equation model.
struct LeakageRates {
  double gamma_up = 0.0;
  double gamma_down = 0.0;
  double p0 = 0.0;

  double total() const { return gamma_up + gamma_down; }           // Gamma
  double saturation() const {                                      // p_inf
    const double g = total();
    return g > 0.0 ? gamma_up / g : 0.0;
  }
};

struct FitResult {
  Eigen::VectorXd parameters;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
};

struct FidelityFit {
  double amplitude = 0.0;  // A
  double offset = 0.0;     // B
  double decay = 0.0;      // p
  double r_clifford = 0.0;  // (1 - p) / 2
  FitResult fit;
};

// |2> population after m Cliffords. Discrete form iterates to
// (p0 - p_inf)(1 - Gamma)^m + p_inf; continuous form uses exp(-Gamma m).
double rate_eq_population(const LeakageRates& rates, double m, bool discrete);

// Sequence fidelity decay A p^m + B by damped least squares.
FidelityFit fit_sequence_fidelity(std::span<const double> lengths,
                                  std::span<const double> p_survival);

// Continuous rate-equation fit of (gamma_up, gamma_down, p0) to P2(m).
struct LeakageFit {
  LeakageRates rates;
  FitResult fit;
};
LeakageFit fit_leakage(std::span<const double> lengths, std::span<const double> p2);

struct RateFit {
  double rate_per_ns = 0.0;
  double residual_norm = 0.0;
  bool converged = false;
};

// 1 -> 2 heating rate from a P2(t) trace starting in |1>, with both decay
// times held fixed (three-rate model, single free parameter).
RateFit fit_heating_12(std::span<const double> t_ns, std::span<const double> p2,
                       double t1_10_us, double t1_21_us);

// 0 -> 1 heating rate from a P1(t) trace starting in |0> with T1 fixed.
RateFit fit_heating_01(std::span<const double> t_ns, std::span<const double> p1,
                       double t1_us);

// Measurement-infidelity transform: gamma_up -> A gamma_up + B gamma_down,
// gamma_down -> Gamma - transformed gamma_up; Gamma is preserved exactly.
// p0 maps to the observed A p0 + B (1 - p0).
LeakageRates infidelity_transform(const LeakageRates& rates, double a, double b);

// Monte Carlo of c2(m) = sum_k g e^{i theta_k}; theta_k = k * phase_step plus
// a uniform random phase when randomize is set. Returns mean |c2(m)|^2 for
// m = 0..m_max.
std::vector<double> coherent_walk(int m_max, double g_magnitude, double phase_step,
                                  int trials, bool randomize, RngStream& rng);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LinearFit fit_linear(std::span<const double> x, std::span<const double> y);

struct PowerFit {
  double prefactor = 0.0;
  double exponent = 0.0;
  double r_squared = 0.0;  // of the log-log fit
};
PowerFit fit_power(std::span<const double> x, std::span<const double> y);

// Damped Gauss-Newton (Levenberg-Marquardt) with finite-difference Jacobians.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
FitResult levenberg_marquardt(const ResidualFn& residuals, const Eigen::VectorXd& x0,
                              int max_iterations = 200, double tolerance = 1e-12);

}  // namespace qleak
