#include "cliffords.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace qleak {

namespace {

const std::complex<double> kImag{0.0, 1.0};

Eigen::Matrix2cd rotation(double theta, double nx, double ny) {
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  Eigen::Matrix2cd u;
  u << c, -kImag * s * (nx - kImag * ny),
       -kImag * s * (nx + kImag * ny), c;
  // matches exp(-i theta/2 (nx sx + ny sy)) in the {|0>, |1>} basis
  return u;
}

using P = Primitive;

// Temporal order (first pulse first). Derived from pi/2 and pi generators so
// that the group totals come out at exactly 9 pi and 36 pi/2 pulses: the
// (x+z)/sqrt(2) axis flip carries an equivalent 3-pulse form with two pi
// pulses, all other elements use their shortest form.
const std::array<std::vector<Primitive>, 24> kDecompositions = {{
    std::vector<Primitive>{},               //  0 identity
    {P::XPi},                               //  1 X pi
    {P::YPi},                               //  2 Y pi
    {P::YPi, P::XPi},                       //  3 Z pi
    {P::XHalf, P::YHalf},                   //  4
    {P::XHalf, P::YHalfNeg},                //  5
    {P::XHalfNeg, P::YHalf},                //  6
    {P::XHalfNeg, P::YHalfNeg},             //  7
    {P::YHalf, P::XHalf},                   //  8
    {P::YHalf, P::XHalfNeg},                //  9
    {P::YHalfNeg, P::XHalf},                // 10
    {P::YHalfNeg, P::XHalfNeg},             // 11
    {P::XHalf},                             // 12 X pi/2
    {P::XHalfNeg},                          // 13 -X pi/2
    {P::YHalf},                             // 14 Y pi/2
    {P::YHalfNeg},                          // 15 -Y pi/2
    {P::XHalfNeg, P::YHalf, P::XHalf},      // 16 Z pi/2
    {P::XHalf, P::YHalf, P::XHalfNeg},      // 17 -Z pi/2
    {P::YHalfNeg, P::XPi, P::YPi},          // 18 pi about (x+z)/sqrt2
    {P::YHalfNeg, P::XPi},                  // 19 pi about (x-z)/sqrt2
    {P::XHalfNeg, P::YPi},                  // 20 pi about (y+z)/sqrt2
    {P::XHalf, P::YPi},                     // 21 pi about (y-z)/sqrt2
    {P::XHalf, P::YHalf, P::XHalf},         // 22 pi about (x+y)/sqrt2
    {P::XHalfNeg, P::YHalf, P::XHalfNeg},   // 23 pi about (x-y)/sqrt2
}};

}  // namespace

const char* primitive_name(Primitive p) {
  switch (p) {
    case P::XPi: return "Xpi";
    case P::YPi: return "Ypi";
    case P::XHalf: return "Xpi/2";
    case P::XHalfNeg: return "-Xpi/2";
    case P::YHalf: return "Ypi/2";
    case P::YHalfNeg: return "-Ypi/2";
  }
  return "?";
}

bool primitive_is_pi(Primitive p) { return p == P::XPi || p == P::YPi; }

double phase_distance(const Eigen::Matrix2cd& u, const Eigen::Matrix2cd& v) {
  return 0.5 * std::abs((u.adjoint() * v).trace());
}

Eigen::Matrix2cd CliffordTable::primitive_unitary(Primitive p) {
  switch (p) {
    case P::XPi: return rotation(kPi, 1, 0);
    case P::YPi: return rotation(kPi, 0, 1);
    case P::XHalf: return rotation(0.5 * kPi, 1, 0);
    case P::XHalfNeg: return rotation(-0.5 * kPi, 1, 0);
    case P::YHalf: return rotation(0.5 * kPi, 0, 1);
    case P::YHalfNeg: return rotation(-0.5 * kPi, 0, 1);
  }
  throw std::logic_error("unknown primitive");
}

PulseSpec primitive_spec(Primitive p, const GateParams& gp, double anharmonicity) {
  if (gp.pi_amplitude <= 0.0 || gp.half_pi_amplitude <= 0.0) {
    throw std::invalid_argument("primitive_spec: pulse amplitudes not calibrated");
  }
  PulseSpec spec;
  spec.duration_ns = gp.duration_ns;
  spec.alpha1 = gp.alpha1;
  spec.alpha2 = gp.alpha2;
  spec.detuning_mhz = gp.detuning_mhz;
  spec.anharmonicity = anharmonicity;
  switch (p) {
    case P::XPi: spec.peak_amplitude = gp.pi_amplitude; spec.axis_phase = 0.0; break;
    case P::YPi: spec.peak_amplitude = gp.pi_amplitude; spec.axis_phase = 0.5 * kPi; break;
    case P::XHalf: spec.peak_amplitude = gp.half_pi_amplitude; spec.axis_phase = 0.0; break;
    case P::XHalfNeg:
      spec.peak_amplitude = gp.half_pi_amplitude; spec.axis_phase = 0.0; spec.sign = -1.0; break;
    case P::YHalf: spec.peak_amplitude = gp.half_pi_amplitude; spec.axis_phase = 0.5 * kPi; break;
    case P::YHalfNeg:
      spec.peak_amplitude = gp.half_pi_amplitude; spec.axis_phase = 0.5 * kPi; spec.sign = -1.0; break;
  }
  return spec;
}

CliffordTable::CliffordTable() {
  for (int i = 0; i < 24; ++i) {
    CliffordElement& e = elems_[static_cast<size_t>(i)];
    e.index = i;
    e.decomposition = kDecompositions[static_cast<size_t>(i)];
    e.unitary = Eigen::Matrix2cd::Identity();
    for (Primitive p : e.decomposition) {
      e.unitary = primitive_unitary(p) * e.unitary;  // later pulses act from the left
    }
  }

  // self-checks: distinctness, closure, inverses, pulse-count totals
  auto match = [&](const Eigen::Matrix2cd& u) {
    for (int i = 0; i < 24; ++i) {
      if (phase_distance(elems_[static_cast<size_t>(i)].unitary, u) > 1.0 - 1e-9) return i;
    }
    return -1;
  };
  for (int i = 0; i < 24; ++i) {
    const auto& ui = elems_[static_cast<size_t>(i)].unitary;
    if ((ui.adjoint() * ui - Eigen::Matrix2cd::Identity()).norm() > 1e-12) {
      throw std::logic_error("CliffordTable: element not unitary");
    }
    for (int j = i + 1; j < 24; ++j) {
      if (phase_distance(ui, elems_[static_cast<size_t>(j)].unitary) > 1.0 - 1e-9) {
        throw std::logic_error("CliffordTable: duplicate elements");
      }
    }
  }
  int total_pi = 0, total_half = 0;
  for (const auto& e : elems_) {
    if (e.decomposition.size() > 3) throw std::logic_error("CliffordTable: decomposition too long");
    for (Primitive p : e.decomposition) {
      primitive_is_pi(p) ? ++total_pi : ++total_half;
    }
  }
  if (total_pi != 9 || total_half != 36) {
    throw std::logic_error("CliffordTable: pulse-count totals off");
  }
  for (int a = 0; a < 24; ++a) {
    for (int b = 0; b < 24; ++b) {
      const int idx = match(elems_[static_cast<size_t>(a)].unitary *
                            elems_[static_cast<size_t>(b)].unitary);
      if (idx < 0) throw std::logic_error("CliffordTable: product escaped the group");
      mul_[static_cast<size_t>(a)][static_cast<size_t>(b)] = idx;
    }
  }
  for (int a = 0; a < 24; ++a) {
    const int idx = match(elems_[static_cast<size_t>(a)].unitary.adjoint());
    if (idx < 0) throw std::logic_error("CliffordTable: missing inverse");
    inv_[static_cast<size_t>(a)] = idx;
  }
}

const CliffordTable& CliffordTable::instance() {
  static const CliffordTable table;
  return table;
}

int CliffordTable::recovery(std::span<const int> sequence) const {
  int composed = identity_index();
  for (int idx : sequence) {
    if (idx < 0 || idx >= 24) throw std::invalid_argument("recovery: index out of range");
    composed = multiply(idx, composed);
  }
  return inverse(composed);
}

double CliffordTable::average_pi_count() const {
  int n = 0;
  for (const auto& e : elems_) {
    for (Primitive p : e.decomposition) n += primitive_is_pi(p) ? 1 : 0;
  }
  return n / 24.0;
}

double CliffordTable::average_half_pi_count() const {
  int n = 0;
  for (const auto& e : elems_) {
    for (Primitive p : e.decomposition) n += primitive_is_pi(p) ? 0 : 1;
  }
  return n / 24.0;
}

std::string CliffordTable::to_json() const {
  nlohmann::json root = nlohmann::json::array();
  for (const auto& e : elems_) {
    nlohmann::json el;
    el["index"] = e.index;
    el["decomposition"] = nlohmann::json::array();
    for (Primitive p : e.decomposition) el["decomposition"].push_back(primitive_name(p));
    nlohmann::json u = nlohmann::json::array();
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        u.push_back({e.unitary(r, c).real(), e.unitary(r, c).imag()});
      }
    }
    el["unitary"] = u;
    root.push_back(el);
  }
  return root.dump(2);
}

std::vector<ComplexEnvelope> compile(const CliffordElement& element, const GateParams& gp,
                                     double anharmonicity) {
  std::vector<ComplexEnvelope> envs;
  envs.reserve(element.decomposition.size());
  for (Primitive p : element.decomposition) {
    envs.push_back(make_pulse(primitive_spec(p, gp, anharmonicity), gp.dt_ns));
  }
  return envs;
}

}  // namespace qleak
