#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "pulses.hpp"

namespace qleak {

// Physical pulse primitives the hardware exposes. pi pulses are only needed
// with positive sign inside Cliffords; signed pi pulses still exist via
// PulseSpec for the pseudo-identity sequence.
enum class Primitive { XPi, YPi, XHalf, XHalfNeg, YHalf, YHalfNeg };
inline constexpr int kNumPrimitives = 6;

const char* primitive_name(Primitive p);
bool primitive_is_pi(Primitive p);

struct CliffordElement {
  int index = 0;
  Eigen::Matrix2cd unitary;                 // qubit-subspace action
  std::vector<Primitive> decomposition;     // temporal order, length <= 3
};

// Calibrated pulse parameters shared by every primitive; pi and pi/2 pulses
// use the same duration and detuning.
struct GateParams {
  double duration_ns = 10.0;
  double dt_ns = kDefaultDt;
  double pi_amplitude = 0.0;       // rad/ns, must be set before compiling
  double half_pi_amplitude = 0.0;  // rad/ns
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double detuning_mhz = 0.0;
};

PulseSpec primitive_spec(Primitive p, const GateParams& gp, double anharmonicity);

// The 24-element single-qubit Clifford group with pulse decompositions whose
// totals are exactly 9 pi and 36 pi/2 pulses (averages 0.375 and 1.5).
class CliffordTable {
 public:
  static const CliffordTable& instance();

  const CliffordElement& element(int i) const { return elems_[static_cast<size_t>(i)]; }
  int size() const { return 24; }
  int identity_index() const { return 0; }

  // index of U_a * U_b (b applied first)
  int multiply(int a, int b) const { return mul_[static_cast<size_t>(a)][static_cast<size_t>(b)]; }
  int inverse(int i) const { return inv_[static_cast<size_t>(i)]; }

  // r such that C_r (C_seq[n-1] ... C_seq[0]) = identity up to phase
  int recovery(std::span<const int> sequence) const;

  double average_pi_count() const;
  double average_half_pi_count() const;

  std::string to_json() const;  // conformance dump

  static Eigen::Matrix2cd primitive_unitary(Primitive p);

 private:
  CliffordTable();
  std::array<CliffordElement, 24> elems_;
  std::array<std::array<int, 24>, 24> mul_{};
  std::array<int, 24> inv_{};
};

// One envelope per primitive in the decomposition; the identity compiles to
// an empty list and takes zero time.
std::vector<ComplexEnvelope> compile(const CliffordElement& element, const GateParams& gp,
                                     double anharmonicity);

// |Tr(U^dag V)| / 2; 1 iff equal up to global phase
double phase_distance(const Eigen::Matrix2cd& u, const Eigen::Matrix2cd& v);

}  // namespace qleak
