#include "readout.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "errors.hpp"

namespace qleak {

void ConfusionMatrix::validate() const {
  for (int r = 0; r < 3; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) {
      if (m(r, c) < 0.0 || m(r, c) > 1.0) {
        throw std::invalid_argument("ConfusionMatrix: entries must lie in [0, 1]");
      }
      sum += m(r, c);
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::invalid_argument("ConfusionMatrix: rows must sum to 1");
    }
  }
  if (std::abs(m.determinant()) < 1e-12) {
    throw std::invalid_argument("ConfusionMatrix: matrix not invertible");
  }
}

ConfusionMatrix ConfusionMatrix::paper() {
  ConfusionMatrix cm;
  cm.m << 0.993, 0.0069, 5e-5,
          0.055, 0.945, 5e-4,
          0.0246, 0.083, 0.892;
  // rows renormalized to protect the inverse round trip against the
  // publication's rounded entries
  for (int r = 0; r < 3; ++r) cm.m.row(r) /= cm.m.row(r).sum();
  return cm;
}

void IQModel::validate() const {
  for (double s : stds) {
    if (!(s > 0.0)) throw std::invalid_argument("IQModel: stds must be positive");
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      if (std::abs(centers[a] - centers[b]) < 1e-12) {
        throw std::invalid_argument("IQModel: cloud centers must be distinct");
      }
    }
  }
  if (readout_duration_us < 0.0) {
    throw std::invalid_argument("IQModel: negative readout duration");
  }
}

IQModel IQModel::defaults() {
  IQModel iq;
  // separation error Q(d / 2 sigma) = 1e-4  =>  d / (2 sigma) = 3.71902
  const double d = 1.0;
  const double sigma = d / (2.0 * 3.7190164854557088);
  iq.centers = {std::complex<double>(0.0, 0.0), std::complex<double>(d, 0.0),
                std::complex<double>(0.5 * d, 0.5 * std::sqrt(3.0) * d)};
  iq.stds = {sigma, sigma, sigma};
  iq.readout_duration_us = 1.0;
  return iq;
}

Eigen::Vector3d apply_confusion(const Eigen::Vector3d& true_probs, const ConfusionMatrix& m) {
  return m.m.transpose() * true_probs;
}

VisibilityCorrection correct_visibility(const Eigen::Vector3d& measured,
                                        const ConfusionMatrix& m) {
  if (std::abs(m.m.determinant()) < 1e-12) {
    throw std::invalid_argument("correct_visibility: singular confusion matrix");
  }
  Eigen::Vector3d probs = m.m.transpose().fullPivLu().solve(measured);
  VisibilityCorrection out;
  for (int i = 0; i < 3; ++i) {
    if (probs[i] < 0.0) {
      probs[i] = 0.0;
      out.clipped = true;
    }
  }
  const double sum = probs.sum();
  if (out.clipped && sum > 0.0) probs /= sum;
  out.probs = probs;
  return out;
}

ReadoutSample simulate_readout(const DensityMatrix& rho, const IQModel& iq,
                               const NoiseParams& noise, RngStream& rng) {
  iq.validate();
  // decay and heating act on populations during the window; dephasing does not
  // move weight between levels
  const Eigen::Matrix3d rates = population_rate_matrix(noise);
  const Eigen::Matrix3d window = (rates * us_to_ns(iq.readout_duration_us)).exp();
  const auto p = populations(rho);
  Eigen::Vector3d pops = window * Eigen::Vector3d(p[0], p[1], p[2]);

  const double u = rng.uniform() * pops.sum();
  int label = 2;
  if (u < pops[0]) {
    label = 0;
  } else if (u < pops[0] + pops[1]) {
    label = 1;
  }

  ReadoutSample out;
  out.iq = iq.centers[static_cast<size_t>(label)] +
           iq.stds[static_cast<size_t>(label)] * std::complex<double>(rng.normal(), rng.normal());
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 3; ++s) {
    const double dist = std::abs(out.iq - iq.centers[static_cast<size_t>(s)]) /
                        iq.stds[static_cast<size_t>(s)];
    if (dist < best) {
      best = dist;
      out.label = s;
    }
  }
  return out;
}

ConfusionMatrix estimate_confusion(const IQModel& iq, const NoiseParams& noise, int shots,
                                   RngStream& rng) {
  if (shots < 1000) throw std::invalid_argument("estimate_confusion: shots must be >= 1000");
  ConfusionMatrix cm;
  cm.m.setZero();
  for (int prepared = 0; prepared < 3; ++prepared) {
    const DensityMatrix rho = DensityMatrix::basis(prepared);
    for (int s = 0; s < shots; ++s) {
      const ReadoutSample sample = simulate_readout(rho, iq, noise, rng);
      cm.m(prepared, sample.label) += 1.0;
    }
  }
  cm.m /= static_cast<double>(shots);
  return cm;
}

ConfusionMatrix read_confusion_csv(std::istream& is) {
  ConfusionMatrix cm;
  std::string line;
  int row = 0;
  while (row < 3 && std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cell;
    for (int col = 0; col < 3; ++col) {
      if (!std::getline(ls, cell, ',')) {
        throw std::invalid_argument("confusion CSV: expected 3 columns");
      }
      cm.m(row, col) = std::stod(cell);
    }
    ++row;
  }
  if (row != 3) throw std::invalid_argument("confusion CSV: expected 3 rows");
  cm.validate();
  return cm;
}

void write_confusion_csv(const ConfusionMatrix& m, std::ostream& os) {
  char buf[128];
  for (int r = 0; r < 3; ++r) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", m.m(r, 0), m.m(r, 1), m.m(r, 2));
    os << buf;
  }
}

}  // namespace qleak
