#include "calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "analysis.hpp"
#include "errors.hpp"
#include "rb.hpp"

namespace qleak {

namespace {

// P1 from |0> after `pulses` repetitions of the given pulse
double excited_population(const PulseSpec& spec, int pulses, double dt,
                          const NoiseParams& noise, const SystemParams& sys) {
  DensityMatrix rho;
  const ComplexEnvelope env = make_pulse(spec, dt);
  for (int i = 0; i < pulses; ++i) rho = propagate(rho, env, noise, sys);
  return populations(rho)[1];
}

double golden_max(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while ((b - a) > rel_tol * 0.5 * std::abs(a + b)) {
    if (f1 > f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - phi * (b - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + phi * (b - a); f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

double calibrate_one_amplitude(const GateParams& gp, double target_angle, int pulses,
                               const NoiseParams& noise, const SystemParams& sys) {
  // zeroth order from the pulse area: angle = A T / 2
  const double a0 = 2.0 * target_angle / gp.duration_ns;
  auto p1_at = [&](double amp) {
    PulseSpec spec;
    spec.duration_ns = gp.duration_ns;
    spec.peak_amplitude = amp;
    spec.alpha1 = gp.alpha1;
    spec.alpha2 = gp.alpha2;
    spec.detuning_mhz = gp.detuning_mhz;
    spec.anharmonicity = sys.anharmonicity;
    return excited_population(spec, pulses, gp.dt_ns, noise, sys);
  };

  // coarse bracket around the nominal amplitude
  const int n_grid = 21;
  double best = -1.0, best_amp = a0, step = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    const double amp = a0 * (0.6 + 0.8 * i / (n_grid - 1));
    const double p = p1_at(amp);
    if (p > best) {
      best = p;
      best_amp = amp;
    }
  }
  step = a0 * 0.8 / (n_grid - 1);
  const double lo = best_amp - step, hi = best_amp + step;
  if (best_amp <= a0 * 0.6 + 1e-12 || best_amp >= a0 * 1.4 - 1e-12) {
    throw CalibrationError("calibrate_amplitude: no interior maximum in bracket");
  }
  return golden_max(p1_at, lo, hi, 1e-5);
}

}  // namespace

std::pair<double, double> calibrate_amplitude(const GateParams& gp, const NoiseParams& noise,
                                              const SystemParams& sys) {
  if (!(gp.duration_ns > 0.0)) {
    throw CalibrationError("calibrate_amplitude: non-positive pulse duration");
  }
  const double pi_amp = calibrate_one_amplitude(gp, kPi, 1, noise, sys);
  const double half_amp = calibrate_one_amplitude(gp, 0.5 * kPi, 2, noise, sys);
  return {pi_amp, half_amp};
}

DetuningResult calibrate_detuning(const GateParams& gp, int reps, const NoiseParams& noise,
                                  const SystemParams& sys) {
  if (reps < 1) throw std::invalid_argument("calibrate_detuning: reps must be >= 1");
  if (!(gp.pi_amplitude > 0.0)) {
    throw CalibrationError("calibrate_detuning: pi amplitude not calibrated");
  }

  auto p0_at = [&](double df, int n) {
    const double d[1] = {df};
    return pseudo_identity_sweep(d, n, gp, noise, sys)[0];
  };

  // single-application scan: the response has one broad lobe, so the argmax
  // locates the true optimum rather than a revival of the repeated sequence
  const double scale = (10.0 / gp.duration_ns) * (10.0 / gp.duration_ns);
  double span = 60.0 * scale;
  const int n_grid = 41;
  double best_df = 0.0;
  for (int expand = 0; expand < 3; ++expand) {
    double best = -1.0, lo_p = 0.0, hi_p = 0.0;
    for (int i = 0; i < n_grid; ++i) {
      const double df = -span + 2.0 * span * i / (n_grid - 1);
      const double p = p0_at(df, 1);
      if (i == 0) lo_p = p;
      if (i == n_grid - 1) hi_p = p;
      if (p > best) {
        best = p;
        best_df = df;
      }
    }
    if (best - std::min(lo_p, hi_p) < 1e-9) {
      return {0.0, true};  // no detuning response
    }
    if (std::abs(best_df) < span * 0.95) break;
    span *= 2.0;
  }

  // parabolic sharpening with repeated applications
  double step = 2.0 * span / (n_grid - 1);
  for (int n : {2, std::max(2, reps)}) {
    double st = step / (n == 2 ? 2.0 : 8.0);
    for (int iter = 0; iter < 2; ++iter) {
      const double pm = p0_at(best_df - st, n);
      const double pc = p0_at(best_df, n);
      const double pp = p0_at(best_df + st, n);
      const double den = pm - 2.0 * pc + pp;
      if (std::abs(den) > 1e-15) {
        const double move = 0.5 * st * (pm - pp) / den;
        best_df += std::clamp(move, -st, st);
      }
      st *= 0.5;
    }
  }
  return {best_df, false};
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const Eigen::VectorXd& scale,
                             const NelderMeadOptions& options) {
  const int n = static_cast<int>(x0.size());
  if (scale.size() != n) throw std::invalid_argument("nelder_mead: scale/x0 size mismatch");

  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = objective(x);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "nelder_mead: non-finite objective at [" << x.transpose() << "]";
      throw OptimizationError(os.str());
    }
    return v;
  };

  std::vector<Eigen::VectorXd> verts(static_cast<size_t>(n) + 1, x0);
  std::vector<double> vals(static_cast<size_t>(n) + 1);
  for (int i = 0; i < n; ++i) verts[static_cast<size_t>(i) + 1][i] += scale[i];
  for (size_t i = 0; i < verts.size(); ++i) vals[i] = eval(verts[i]);

  NelderMeadResult out;
  auto order = [&]() {
    std::vector<size_t> idx(verts.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return vals[a] < vals[b]; });
    std::vector<Eigen::VectorXd> v2;
    std::vector<double> f2;
    for (size_t i : idx) {
      v2.push_back(verts[i]);
      f2.push_back(vals[i]);
    }
    verts.swap(v2);
    vals.swap(f2);
  };

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    order();
    out.history.emplace_back(verts[0], vals[0]);
    double diameter = 0.0;
    for (size_t i = 1; i < verts.size(); ++i) {
      diameter = std::max(diameter, (verts[i] - verts[0]).norm());
    }
    if (diameter < options.tolerance) {
      out.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (size_t i = 0; i + 1 < verts.size(); ++i) centroid += verts[i];
    centroid /= n;

    const Eigen::VectorXd& worst = verts.back();
    const Eigen::VectorXd reflected = centroid + (centroid - worst);
    const double fr = eval(reflected);
    if (fr < vals[0]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - worst);
      const double fe = eval(expanded);
      if (fe < fr) {
        verts.back() = expanded;
        vals.back() = fe;
      } else {
        verts.back() = reflected;
        vals.back() = fr;
      }
    } else if (fr < vals[vals.size() - 2]) {
      verts.back() = reflected;
      vals.back() = fr;
    } else {
      const bool outside = fr < vals.back();
      const Eigen::VectorXd contracted =
          outside ? centroid + 0.5 * (reflected - centroid) : centroid + 0.5 * (worst - centroid);
      const double fc = eval(contracted);
      if (fc < (outside ? fr : vals.back())) {
        verts.back() = contracted;
        vals.back() = fc;
      } else {
        for (size_t i = 1; i < verts.size(); ++i) {
          verts[i] = verts[0] + 0.5 * (verts[i] - verts[0]);
          vals[i] = eval(verts[i]);
        }
      }
    }
  }
  order();
  out.x = verts[0];
  out.value = vals[0];
  out.iterations = iter;
  return out;
}

CalibrationResult tune_gate(double alpha1, double alpha2, const GateParams& base,
                            const RBBudget& budget, const NoiseParams& noise,
                            const SystemParams& sys) {
  GateParams gp = base;
  gp.alpha1 = alpha1;
  gp.alpha2 = alpha2;
  gp.detuning_mhz = 0.0;

  auto amps = calibrate_amplitude(gp, noise, sys);
  gp.pi_amplitude = amps.first;
  gp.half_pi_amplitude = amps.second;

  const DetuningResult det = calibrate_detuning(gp, 5, noise, sys);
  gp.detuning_mhz = det.detuning_mhz;

  amps = calibrate_amplitude(gp, noise, sys);
  gp.pi_amplitude = amps.first;
  gp.half_pi_amplitude = amps.second;

  RBConfig rb;
  rb.lengths = budget.lengths;
  rb.num_sequences = budget.num_sequences;
  rb.noise = noise;
  rb.sys = sys;
  rb.master_seed = budget.seed;
  rb.threads = budget.threads;

  auto objective = [&](const Eigen::VectorXd& x) {
    if (x[0] <= 0.0 || x[1] <= 0.0) return 1.0;  // amplitudes must stay physical
    RBConfig cfg = rb;
    cfg.gate = gp;
    cfg.gate.pi_amplitude = x[0];
    cfg.gate.half_pi_amplitude = x[1];
    cfg.gate.detuning_mhz = x[2];
    const RBDataset data = rb_sweep(cfg);
    std::vector<double> m, p0;
    for (size_t i = 0; i < data.lengths.size(); ++i) {
      m.push_back(static_cast<double>(data.lengths[i]));
      p0.push_back(data.mean[i][0]);
    }
    const FidelityFit fit = fit_sequence_fidelity(m, p0);
    if (!fit.fit.converged) return 0.5;
    return fit.r_clifford;
  };

  Eigen::VectorXd x0(3), scale(3);
  x0 << gp.pi_amplitude, gp.half_pi_amplitude, gp.detuning_mhz;
  const double det_scale = (10.0 / gp.duration_ns) * (10.0 / gp.duration_ns);
  scale << 0.01 * gp.pi_amplitude, 0.01 * gp.half_pi_amplitude, 1.0 * det_scale;
  NelderMeadOptions opts;
  opts.max_iterations = budget.nm_max_iterations;
  opts.tolerance = budget.nm_tolerance;
  const NelderMeadResult nm = nelder_mead(objective, x0, scale, opts);

  CalibrationResult out;
  out.pi_amplitude = nm.x[0];
  out.half_pi_amplitude = nm.x[1];
  out.detuning_mhz = nm.x[2];
  out.alpha1 = alpha1;
  out.alpha2 = alpha2;
  out.r_clifford = nm.value;
  out.detuning_flat = det.flat;
  out.objective_history = nm.history;
  return out;
}

}  // namespace qleak
