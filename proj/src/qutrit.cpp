#include "qutrit.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "errors.hpp"

namespace qleak {

namespace {

const std::complex<double> kImag{0.0, 1.0};

// Channel data folded into elementwise form. All jump operators are either
// matrix units |i><j| or diagonal, so the dissipator reduces to diagonal
// feeding plus elementwise damping:
//   D(rho)_ii = sum_j feed(i,j) rho_jj - damp(i,i) rho_ii
//   D(rho)_ij = -damp(i,j) rho_ij           (i != j)
struct Lindblad {
  Eigen::Matrix3d feed = Eigen::Matrix3d::Zero();  // population gain rates
  Eigen::Matrix3d damp = Eigen::Matrix3d::Zero();  // elementwise damping rates
  bool active = false;

  explicit Lindblad(const NoiseParams& n) {
    const double g10 = rate_from_time_us(n.t1_10_us);
    const double g21 = rate_from_time_us(n.t1_21_us);
    const double h12 = rate_per_ms_to_per_ns(n.heat_12_per_ms);
    const double h01 = rate_per_ms_to_per_ns(n.heat_01_per_ms);
    const double gphi = rate_from_time_us(n.tphi1_us);

    feed(0, 1) = g10;  // |0><1|
    feed(1, 2) = g21;  // |1><2|
    feed(2, 1) = h12;  // |2><1|
    feed(1, 0) = h01;  // |1><0|

    Eigen::Vector3d out;  // total outflow per level
    out << h01, g10 + h12, g21;
    // pure dephasing L = sqrt(2/tphi1) diag(0, 1, s): element (i,j) damps at
    // (2/tphi1) (d_i - d_j)^2 / 2, which makes the 0-1 coherence decay at
    // exactly 1/tphi1
    Eigen::Vector3d d;
    d << 0.0, 1.0, n.deph2_scale;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        damp(i, j) = 0.5 * (out(i) + out(j)) + gphi * (d(i) - d(j)) * (d(i) - d(j));
      }
    }
    active = feed.sum() > 0.0 || gphi > 0.0;
  }

  Mat3 apply(const Mat3& rho) const {
    Mat3 d;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) d(i, j) = -damp(i, j) * rho(i, j);
    }
    for (int i = 0; i < 3; ++i) {
      std::complex<double> gain{0.0, 0.0};
      for (int j = 0; j < 3; ++j) gain += feed(i, j) * rho(j, j);
      d(i, i) += gain;
    }
    return d;
  }
};

Mat3 derivative(const Mat3& rho, const Mat3& H, const Lindblad& lb) {
  Mat3 d = -kImag * (H * rho - rho * H);
  if (lb.active) d += lb.apply(rho);
  return d;
}

// One classical RK4 step of size h with Hamiltonians at t, t+h/2, t+h.
inline void rk4_step(Mat3& rho, const Mat3& h0, const Mat3& hm, const Mat3& h1, double h,
                     const Lindblad& lb) {
  const Mat3 k1 = derivative(rho, h0, lb);
  const Mat3 k2 = derivative(rho + (0.5 * h) * k1, hm, lb);
  const Mat3 k3 = derivative(rho + (0.5 * h) * k2, hm, lb);
  const Mat3 k4 = derivative(rho + h * k3, h1, lb);
  rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Raw integration without density-matrix checks so it can also evolve the
// (non-Hermitian) matrix units when assembling a superoperator.
Mat3 rk4_evolve(Mat3 state, const ComplexEnvelope& env, const Lindblad& lb,
                const SystemParams& sys) {
  const size_t n = env.samples.size();
  if (n < 3 || n % 2 == 0) {
    throw std::invalid_argument("propagate: envelope needs an odd sample count >= 3");
  }
  const double h = 2.0 * env.dt;
  std::vector<Mat3> hams(n);
  for (size_t k = 0; k < n; ++k) hams[k] = drive_hamiltonian(env.samples[k], sys);
  for (size_t k = 0; k + 2 < n; k += 2) {
    rk4_step(state, hams[k], hams[k + 1], hams[k + 2], h, lb);
  }
  return state;
}

Superop generator_superop(const Mat3& H, const Lindblad& lb) {
  Superop g;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      Mat3 e = Mat3::Zero();
      e(i, j) = 1.0;
      const Mat3 de = derivative(e, H, lb);
      g.col(i + 3 * j) = Eigen::Map<const Eigen::Matrix<std::complex<double>, 9, 1>>(de.data());
    }
  }
  return g;
}

}  // namespace

void NoiseParams::validate() const {
  if (heat_12_per_ms < 0.0 || heat_01_per_ms < 0.0) {
    throw std::invalid_argument("NoiseParams: heating rates must be >= 0");
  }
  if (deph2_scale < 0.0) {
    throw std::invalid_argument("NoiseParams: deph2_scale must be >= 0");
  }
}

double NoiseParams::quasistatic_sigma() const {
  if (!quasistatic_enabled()) return 0.0;
  return std::numbers::sqrt2 / us_to_ns(tphi2_us);
}

void SystemParams::validate() const {
  if (anharmonicity == 0.0) {
    throw std::invalid_argument("SystemParams: anharmonicity must be nonzero");
  }
}

DensityMatrix DensityMatrix::basis(int level) {
  if (level < 0 || level > 2) throw std::invalid_argument("DensityMatrix: level out of range");
  Mat3 m = Mat3::Zero();
  m(level, level) = 1.0;
  return DensityMatrix(m);
}

void DensityMatrix::validate(const char* context) const {
  const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) {
    std::ostringstream os;
    os << context << ": state not Hermitian (deviation " << herm << ")";
    throw NumericalError(os.str());
  }
  const double tr = m_.trace().real();
  if (std::abs(tr - 1.0) > 1e-9) {
    std::ostringstream os;
    os << context << ": trace deviates from 1 by " << tr - 1.0;
    throw NumericalError(os.str());
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (m_ + m_.adjoint()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) {
    std::ostringstream os;
    os << context << ": negative eigenvalue " << es.eigenvalues().minCoeff();
    throw NumericalError(os.str());
  }
}

std::array<double, 3> populations(const DensityMatrix& rho) {
  return {rho.mat()(0, 0).real(), rho.mat()(1, 1).real(), rho.mat()(2, 2).real()};
}

Mat3 drive_hamiltonian(std::complex<double> omega, const SystemParams& sys) {
  Mat3 h = Mat3::Zero();
  h(1, 1) = sys.quasistatic_offset;
  h(2, 2) = sys.anharmonicity + 2.0 * sys.quasistatic_offset;
  const double r = sys.relative_12_coupling;
  h(1, 0) = 0.5 * omega;
  h(0, 1) = 0.5 * std::conj(omega);
  h(2, 1) = 0.5 * r * omega;
  h(1, 2) = 0.5 * r * std::conj(omega);
  return h;
}

DensityMatrix propagate(const DensityMatrix& rho, const ComplexEnvelope& env,
                        const NoiseParams& noise, const SystemParams& sys) {
  noise.validate();
  sys.validate();
  const Lindblad lb(noise);
  Mat3 out = rk4_evolve(rho.mat(), env, lb, sys);
  out = 0.5 * (out + out.adjoint().eval());
  DensityMatrix result(out);
  result.validate("propagate");
  return result;
}

DensityMatrix idle(const DensityMatrix& rho, double duration_ns, const NoiseParams& noise,
                   const SystemParams& sys) {
  if (duration_ns < 0.0) throw std::invalid_argument("idle: negative duration");
  if (duration_ns == 0.0) return rho;
  noise.validate();
  const Lindblad lb(noise);
  const Mat3 h = drive_hamiltonian({0.0, 0.0}, sys);
  const Superop gen = generator_superop(h, lb);
  const Superop map = (gen * duration_ns).exp();
  DensityMatrix result = apply_superoperator(map, rho);
  result.mat() = 0.5 * (result.mat() + result.mat().adjoint().eval());
  result.validate("idle");
  return result;
}

DensityMatrix idle(const DensityMatrix& rho, double duration_ns, const NoiseParams& noise) {
  if (duration_ns < 0.0) throw std::invalid_argument("idle: negative duration");
  if (duration_ns == 0.0) return rho;
  noise.validate();
  const Lindblad lb(noise);
  // populations are frame-independent; evolve with H = 0
  const Superop gen = generator_superop(Mat3::Zero(), lb);
  const Superop map = (gen * duration_ns).exp();
  DensityMatrix result = apply_superoperator(map, rho);
  result.mat() = 0.5 * (result.mat() + result.mat().adjoint().eval());
  result.validate("idle");
  return result;
}

Superop pulse_superoperator(const ComplexEnvelope& env, const NoiseParams& noise,
                            const SystemParams& sys) {
  noise.validate();
  sys.validate();
  const Lindblad lb(noise);
  Superop map;
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      Mat3 e = Mat3::Zero();
      e(i, j) = 1.0;
      const Mat3 out = rk4_evolve(e, env, lb, sys);
      map.col(i + 3 * j) = Eigen::Map<const Eigen::Matrix<std::complex<double>, 9, 1>>(out.data());
    }
  }
  return map;
}

DensityMatrix apply_superoperator(const Superop& map, const DensityMatrix& rho) {
  Eigen::Matrix<std::complex<double>, 9, 1> v =
      map * Eigen::Map<const Eigen::Matrix<std::complex<double>, 9, 1>>(rho.mat().data());
  Mat3 out = Eigen::Map<const Mat3>(v.data());
  return DensityMatrix(out);
}

Eigen::Matrix3d population_rate_matrix(const NoiseParams& noise) {
  const double g10 = rate_from_time_us(noise.t1_10_us);
  const double g21 = rate_from_time_us(noise.t1_21_us);
  const double h12 = rate_per_ms_to_per_ns(noise.heat_12_per_ms);
  const double h01 = rate_per_ms_to_per_ns(noise.heat_01_per_ms);
  Eigen::Matrix3d r;
  r << -h01, g10, 0.0,
       h01, -(g10 + h12), g21,
       0.0, h12, -g21;
  return r;
}

}  // namespace qleak
