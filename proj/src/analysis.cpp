#include "analysis.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "units.hpp"

namespace qleak {

namespace {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& r0) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd jac(r0.size(), n);
  for (int j = 0; j < n; ++j) {
    const double step = 1e-7 * std::max(1e-4, std::abs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return jac;
}

double sum_sq(const Eigen::VectorXd& v) { return v.squaredNorm(); }

// golden-section minimization of a 1-D function on [a, b]
double golden_min(const std::function<double(double)>& f, double a, double b, double tol,
                  int max_iter = 200) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < max_iter && (b - a) > tol * (std::abs(a) + std::abs(b) + 1e-30); ++i) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - phi * (b - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + phi * (b - a); f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

void check_xy(std::span<const double> x, std::span<const double> y, size_t min_points,
              const char* who) {
  if (x.size() != y.size()) throw std::invalid_argument(std::string(who) + ": size mismatch");
  if (x.size() < min_points) throw std::invalid_argument(std::string(who) + ": too few points");
}

}  // namespace

double rate_eq_population(const LeakageRates& rates, double m, bool discrete) {
  const double gamma = rates.total();
  const double pinf = rates.saturation();
  const double factor = discrete ? std::pow(1.0 - gamma, m) : std::exp(-gamma * m);
  return (rates.p0 - pinf) * factor + pinf;
}

FitResult levenberg_marquardt(const ResidualFn& residuals, const Eigen::VectorXd& x0,
                              int max_iterations, double tolerance) {
  FitResult out;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = residuals(x);
  double ssr = sum_sq(r);
  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    const Eigen::MatrixXd jac = numeric_jacobian(residuals, x, r);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    if (jtr.norm() < tolerance * (1.0 + std::sqrt(ssr))) {
      converged = true;
      break;
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (int d = 0; d < damped.rows(); ++d) {
        damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      }
      const Eigen::VectorXd dx = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd xn = x + dx;
      const Eigen::VectorXd rn = residuals(xn);
      const double ssrn = sum_sq(rn);
      if (std::isfinite(ssrn) && ssrn <= ssr) {
        const double rel = std::abs(ssr - ssrn) / std::max(ssr, 1e-300);
        const double step = dx.norm() / std::max(1.0, x.norm());
        x = xn;
        r = rn;
        ssr = ssrn;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel < tolerance && step < 1e-10) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      converged = true;  // no downhill step left at any damping
      break;
    }
    if (converged) break;
  }

  out.parameters = x;
  out.residual_norm = std::sqrt(ssr);
  out.iterations = iter;
  out.converged = converged;

  const Eigen::MatrixXd jac = numeric_jacobian(residuals, x, r);
  Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jtj);
  const double cond = svd.singularValues()(0) /
                      std::max(svd.singularValues()(svd.singularValues().size() - 1), 1e-300);
  if (!(cond < 1e12)) {
    out.degenerate = true;
    out.converged = false;
  }
  const int dof = std::max<int>(1, static_cast<int>(r.size()) - static_cast<int>(x.size()));
  const double variance = ssr / dof;
  if (!out.degenerate) {
    out.covariance = variance * jtj.inverse();
  } else {
    out.covariance = Eigen::MatrixXd::Constant(x.size(), x.size(),
                                               std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

FidelityFit fit_sequence_fidelity(std::span<const double> lengths,
                                  std::span<const double> p_survival) {
  check_xy(lengths, p_survival, 4, "fit_sequence_fidelity");
  const int n = static_cast<int>(lengths.size());
  Eigen::Map<const Eigen::VectorXd> m(lengths.data(), n), y(p_survival.data(), n);

  // heuristics: offset from the tail, decay scale from the first drop
  double b0 = y[n - 1];
  double a0 = std::clamp(y[0] - b0, 1e-6, 1.0);
  double p0 = 0.999;
  for (int i = 1; i < n; ++i) {
    const double num = y[i] - b0, den = y[0] - b0;
    if (num > 1e-12 && den > 1e-12 && lengths[i] > lengths[0]) {
      p0 = std::clamp(std::pow(num / den, 1.0 / (lengths[i] - lengths[0])), 0.5, 0.999999);
      break;
    }
  }
  b0 = std::clamp(b0, 0.0, 1.0);

  auto model = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = q[0] * std::pow(q[2], m[i]) + q[1] - y[i];
    return r;
  };

  Eigen::VectorXd x0(3);
  x0 << a0, b0, p0;
  FitResult fit = levenberg_marquardt(model, x0);
  if (!fit.converged && !fit.degenerate) {
    // multi-start fallback over typical SPAM splits
    for (double bs : {0.5, 0.25, (double)y.minCoeff()}) {
      Eigen::VectorXd alt(3);
      alt << std::max(y[0] - bs, 1e-3), bs, 0.999;
      FitResult f2 = levenberg_marquardt(model, alt);
      if (f2.converged) {
        fit = f2;
        break;
      }
    }
  }

  FidelityFit out;
  out.amplitude = fit.parameters[0];
  out.offset = fit.parameters[1];
  out.decay = fit.parameters[2];
  out.r_clifford = 0.5 * (1.0 - out.decay);
  out.fit = fit;
  if (!(out.decay > 0.0 && out.decay < 1.0)) {
    out.fit.converged = false;
    out.fit.degenerate = true;
  }
  return out;
}

LeakageFit fit_leakage(std::span<const double> lengths, std::span<const double> p2) {
  check_xy(lengths, p2, 4, "fit_leakage");
  const int n = static_cast<int>(lengths.size());
  Eigen::Map<const Eigen::VectorXd> m(lengths.data(), n), y(p2.data(), n);

  const double pinf0 = std::max(y[n - 1], 1e-9);
  const double p00 = std::clamp(y[0], 0.0, 1.0);
  // time to (1 - 1/e) of the rise toward saturation
  double gamma0 = 1.0 / std::max(1.0, m[n - 1] / 3.0);
  for (int i = 0; i < n; ++i) {
    if (std::abs(pinf0 - p00) > 1e-12 &&
        (y[i] - p00) / (pinf0 - p00) > 0.632 && m[i] > 0) {
      gamma0 = 1.0 / m[i];
      break;
    }
  }

  auto model = [&](const Eigen::VectorXd& q) {
    // q = (gamma_up, gamma_down, p0)
    LeakageRates rr{q[0], q[1], q[2]};
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) r[i] = rate_eq_population(rr, m[i], false) - y[i];
    return r;
  };

  Eigen::VectorXd x0(3);
  x0 << pinf0 * gamma0, (1.0 - pinf0) * gamma0, p00;
  FitResult fit = levenberg_marquardt(model, x0);

  LeakageFit out;
  out.rates.gamma_up = fit.parameters[0];
  out.rates.gamma_down = fit.parameters[1];
  out.rates.p0 = fit.parameters[2];
  out.fit = fit;
  return out;
}

RateFit fit_heating_12(std::span<const double> t_ns, std::span<const double> p2,
                       double t1_10_us, double t1_21_us) {
  check_xy(t_ns, p2, 3, "fit_heating_12");
  const double g10 = rate_from_time_us(t1_10_us);
  const double g21 = rate_from_time_us(t1_21_us);

  auto ssr_for = [&](double h12) {
    Eigen::Matrix3d r;
    r << 0.0, g10, 0.0,
         0.0, -(g10 + h12), g21,
         0.0, h12, -g21;
    double ssr = 0.0;
    for (size_t i = 0; i < t_ns.size(); ++i) {
      const Eigen::Matrix3d u = (r * t_ns[i]).exp();
      const double model = u(2, 1);  // P2 at time t starting from |1>
      ssr += (model - p2[i]) * (model - p2[i]);
    }
    return ssr;
  };

  // coarse log-spaced scan, then golden refinement
  double best = 0.0, best_ssr = ssr_for(0.0);
  for (double lg = -9.0; lg <= -3.0; lg += 0.25) {
    const double h = std::pow(10.0, lg);
    const double s = ssr_for(h);
    if (s < best_ssr) {
      best_ssr = s;
      best = h;
    }
  }
  RateFit out;
  if (best == 0.0) {
    out.rate_per_ns = 0.0;
    out.residual_norm = std::sqrt(best_ssr);
    out.converged = true;
    return out;
  }
  const double lo = best / 3.0, hi = best * 3.0;
  out.rate_per_ns = golden_min(ssr_for, lo, hi, 1e-10);
  out.residual_norm = std::sqrt(ssr_for(out.rate_per_ns));
  out.converged = true;
  return out;
}

RateFit fit_heating_01(std::span<const double> t_ns, std::span<const double> p1,
                       double t1_us) {
  check_xy(t_ns, p1, 3, "fit_heating_01");
  const double g = rate_from_time_us(t1_us);
  auto ssr_for = [&](double h) {
    double ssr = 0.0;
    for (size_t i = 0; i < t_ns.size(); ++i) {
      const double k = h + g;
      const double model = k > 0.0 ? h / k * (1.0 - std::exp(-k * t_ns[i])) : 0.0;
      ssr += (model - p1[i]) * (model - p1[i]);
    }
    return ssr;
  };
  double best = 0.0, best_ssr = ssr_for(0.0);
  for (double lg = -9.0; lg <= -3.0; lg += 0.25) {
    const double h = std::pow(10.0, lg);
    const double s = ssr_for(h);
    if (s < best_ssr) {
      best_ssr = s;
      best = h;
    }
  }
  RateFit out;
  if (best == 0.0) {
    out.rate_per_ns = 0.0;
    out.residual_norm = std::sqrt(best_ssr);
    out.converged = true;
    return out;
  }
  out.rate_per_ns = golden_min(ssr_for, best / 3.0, best * 3.0, 1e-10);
  out.residual_norm = std::sqrt(ssr_for(out.rate_per_ns));
  out.converged = true;
  return out;
}

LeakageRates infidelity_transform(const LeakageRates& rates, double a, double b) {
  if (!(a > 0.0 && a <= 1.0) || !(b >= 0.0 && b < 1.0)) {
    throw std::invalid_argument("infidelity_transform: A in (0,1], B in [0,1) required");
  }
  LeakageRates out;
  out.gamma_up = a * rates.gamma_up + b * rates.gamma_down;
  out.gamma_down = rates.total() - out.gamma_up;
  out.p0 = a * rates.p0 + b * (1.0 - rates.p0);
  return out;
}

std::vector<double> coherent_walk(int m_max, double g_magnitude, double phase_step,
                                  int trials, bool randomize, RngStream& rng) {
  if (trials < 1) throw std::invalid_argument("coherent_walk: trials must be >= 1");
  if (m_max < 0) throw std::invalid_argument("coherent_walk: m_max must be >= 0");
  std::vector<double> mean(static_cast<size_t>(m_max) + 1, 0.0);
  for (int t = 0; t < trials; ++t) {
    std::complex<double> c2{0.0, 0.0};
    for (int k = 1; k <= m_max; ++k) {
      double theta = phase_step * k;
      if (randomize) theta += kTwoPi * rng.uniform();
      c2 += std::polar(g_magnitude, theta);
      mean[static_cast<size_t>(k)] += std::norm(c2);
    }
  }
  for (auto& v : mean) v /= trials;
  return mean;
}

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
  check_xy(x, y, 2, "fit_linear");
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) {
    throw std::invalid_argument("fit_linear: degenerate abscissae");
  }
  LinearFit out;
  out.slope = (n * sxy - sx * sy) / denom;
  out.intercept = (sy - out.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / n;
  for (int i = 0; i < n; ++i) {
    const double e = y[i] - (out.intercept + out.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  out.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return out;
}

PowerFit fit_power(std::span<const double> x, std::span<const double> y) {
  check_xy(x, y, 3, "fit_power");
  std::vector<double> lx(x.size()), ly(y.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw std::invalid_argument("fit_power: requires positive data");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const LinearFit lin = fit_linear(lx, ly);
  PowerFit out;
  out.prefactor = std::exp(lin.intercept);
  out.exponent = lin.slope;
  out.r_squared = lin.r_squared;
  return out;
}

}  // namespace qleak
