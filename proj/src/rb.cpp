#include "rb.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "errors.hpp"
#include "rng.hpp"

namespace qleak {

namespace {

// Evolution maps of the six primitives for one quasi-static offset draw.
struct PrimitiveMaps {
  std::array<Superop, kNumPrimitives> maps;

  PrimitiveMaps(const GateParams& gp, const NoiseParams& noise, const SystemParams& sys) {
    for (int p = 0; p < kNumPrimitives; ++p) {
      const PulseSpec spec =
          primitive_spec(static_cast<Primitive>(p), gp, sys.anharmonicity);
      maps[static_cast<size_t>(p)] =
          pulse_superoperator(make_pulse(spec, gp.dt_ns), noise, sys);
    }
  }

  DensityMatrix apply(const CliffordElement& element, DensityMatrix rho) const {
    for (Primitive p : element.decomposition) {
      rho = apply_superoperator(maps[static_cast<size_t>(p)], rho);
    }
    return rho;
  }
};

std::array<double, 3> run_exact_sequence(RngStream& gate_rng, int m) {
  const CliffordTable& table = CliffordTable::instance();
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  std::vector<int> indices(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    indices[static_cast<size_t>(k)] = static_cast<int>(gate_rng.uniform_int(24));
  }
  for (int idx : indices) u = table.element(idx).unitary * u;
  u = table.element(table.recovery(indices)).unitary * u;
  const double p0 = std::norm(u(0, 0));
  const double p1 = std::norm(u(1, 0));
  return {p0, p1, 0.0};
}

std::array<double, 3> run_pulse_sequence(RngStream& gate_rng, int m, const PrimitiveMaps& maps) {
  const CliffordTable& table = CliffordTable::instance();
  std::vector<int> indices(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) {
    indices[static_cast<size_t>(k)] = static_cast<int>(gate_rng.uniform_int(24));
  }
  DensityMatrix rho;  // |0><0|
  try {
    for (int idx : indices) rho = maps.apply(table.element(idx), rho);
    rho = maps.apply(table.element(table.recovery(indices)), rho);
    rho.mat() = 0.5 * (rho.mat() + rho.mat().adjoint().eval());
    rho.validate("run_sequence");
  } catch (const NumericalError& err) {
    throw NumericalError(std::string("run_sequence(m=") + std::to_string(m) +
                         "): " + err.what());
  }
  return populations(rho);
}

}  // namespace

void RBConfig::validate() const {
  if (lengths.empty()) throw std::invalid_argument("RBConfig: lengths must be nonempty");
  for (size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] < 0) throw std::invalid_argument("RBConfig: negative sequence length");
    if (i > 0 && lengths[i] <= lengths[i - 1]) {
      throw std::invalid_argument("RBConfig: lengths must be strictly ascending");
    }
  }
  if (num_sequences < 1) throw std::invalid_argument("RBConfig: num_sequences must be >= 1");
  if (threads < 0) throw std::invalid_argument("RBConfig: negative thread count");
  noise.validate();
  sys.validate();
}

uint64_t sequence_stream_key(uint64_t master_seed, int length_index, int seq_index) {
  return RngStream::derive(master_seed, {static_cast<uint64_t>(length_index),
                                         static_cast<uint64_t>(seq_index)});
}

std::array<double, 3> run_sequence(uint64_t stream_key, int m, const RBConfig& config) {
  RngStream gate_rng(RngStream::derive(stream_key, {0}));
  if (config.exact_unitary) {
    return run_exact_sequence(gate_rng, m);
  }
  SystemParams sys = config.sys;
  if (config.noise.quasistatic_enabled()) {
    RngStream offset_rng(RngStream::derive(stream_key, {1}));
    sys.quasistatic_offset = config.noise.quasistatic_sigma() * offset_rng.normal();
  }
  const PrimitiveMaps maps(config.gate, config.noise, sys);
  return run_pulse_sequence(gate_rng, m, maps);
}

RBDataset rb_sweep(const RBConfig& config) {
  config.validate();
  const size_t num_lengths = config.lengths.size();
  const size_t k = static_cast<size_t>(config.num_sequences);

  RBDataset data;
  data.lengths = config.lengths;
  data.mean.resize(num_lengths);
  data.sem.resize(num_lengths);
  data.raw.assign(num_lengths, std::vector<std::array<double, 3>>(k));

  // flat list of (length index, sequence index) work items
  const size_t total = num_lengths * k;
  unsigned n_threads = config.threads == 0
                           ? std::max(1u, std::thread::hardware_concurrency())
                           : static_cast<unsigned>(config.threads);
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(total));

  // Without quasi-static dephasing every sequence sees identical pulse maps;
  // build them once (result is bitwise the same as the per-sequence path).
  std::unique_ptr<PrimitiveMaps> shared_maps;
  if (!config.exact_unitary && !config.noise.quasistatic_enabled()) {
    shared_maps = std::make_unique<PrimitiveMaps>(config.gate, config.noise, config.sys);
  }

  std::exception_ptr failure = nullptr;
  std::atomic<size_t> cursor{0};
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    while (true) {
      const size_t item = cursor.fetch_add(1);
      if (item >= total || failed.load()) break;
      const size_t li = item / k, si = item % k;
      try {
        const uint64_t key = sequence_stream_key(config.master_seed, static_cast<int>(li),
                                                 static_cast<int>(si));
        if (shared_maps) {
          RngStream gate_rng(RngStream::derive(key, {0}));
          data.raw[li][si] = run_pulse_sequence(gate_rng, config.lengths[li], *shared_maps);
        } else {
          data.raw[li][si] = run_sequence(key, config.lengths[li], config);
        }
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        break;
      }
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  // fixed-order reduction: results do not depend on the worker count
  for (size_t li = 0; li < num_lengths; ++li) {
    for (int c = 0; c < 3; ++c) {
      double sum = 0.0;
      for (size_t si = 0; si < k; ++si) sum += data.raw[li][si][static_cast<size_t>(c)];
      const double mean = sum / static_cast<double>(k);
      double var = 0.0;
      for (size_t si = 0; si < k; ++si) {
        const double d = data.raw[li][si][static_cast<size_t>(c)] - mean;
        var += d * d;
      }
      data.mean[li][static_cast<size_t>(c)] = mean;
      data.sem[li][static_cast<size_t>(c)] =
          k > 1 ? std::sqrt(var / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
    }
  }
  return data;
}

std::vector<double> pseudo_identity_sweep(std::span<const double> detunings_mhz, int reps,
                                          const GateParams& gp, const NoiseParams& noise,
                                          const SystemParams& sys) {
  if (reps < 1) throw std::invalid_argument("pseudo_identity_sweep: reps must be >= 1");
  std::vector<double> p0;
  p0.reserve(detunings_mhz.size());
  for (double df : detunings_mhz) {
    GateParams g = gp;
    g.detuning_mhz = df;
    PulseSpec plus = primitive_spec(Primitive::XPi, g, sys.anharmonicity);
    PulseSpec minus = plus;
    minus.sign = -1.0;
    const ComplexEnvelope env_plus = make_pulse(plus, g.dt_ns);
    const ComplexEnvelope env_minus = make_pulse(minus, g.dt_ns);
    DensityMatrix rho;
    for (int r = 0; r < reps; ++r) {
      rho = propagate(rho, env_plus, noise, sys);
      rho = propagate(rho, env_minus, noise, sys);
    }
    p0.push_back(populations(rho)[0]);
  }
  return p0;
}

std::vector<std::array<double, 3>> tomography_trajectory(std::span<const double> fractions,
                                                         const GateParams& gp,
                                                         const NoiseParams& noise,
                                                         const SystemParams& sys) {
  std::vector<std::array<double, 3>> bloch;
  bloch.reserve(fractions.size());
  for (double f : fractions) {
    DensityMatrix rho;
    if (f != 0.0) {
      PulseSpec spec = primitive_spec(Primitive::XPi, gp, sys.anharmonicity);
      spec.peak_amplitude = f * gp.pi_amplitude;
      rho = propagate(rho, make_pulse(spec, gp.dt_ns), noise, sys);
    }
    const auto& m = rho.mat();
    bloch.push_back({2.0 * m(0, 1).real(), -2.0 * m(0, 1).imag(),
                     m(0, 0).real() - m(1, 1).real()});
  }
  return bloch;
}

RelaxationCurves relaxation_experiment(int initial_level, std::span<const double> delays_us,
                                       const NoiseParams& noise) {
  RelaxationCurves curves;
  const DensityMatrix rho0 = DensityMatrix::basis(initial_level);
  for (double t_us : delays_us) {
    curves.delays_us.push_back(t_us);
    curves.populations.push_back(populations(idle(rho0, us_to_ns(t_us), noise)));
  }
  return curves;
}

void write_rb_csv(const RBDataset& data, std::ostream& os) {
  os << "m,mean_p0,sem_p0,mean_p1,sem_p1,mean_p2,sem_p2\n";
  char buf[256];
  for (size_t i = 0; i < data.lengths.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", data.lengths[i],
                  data.mean[i][0], data.sem[i][0], data.mean[i][1], data.sem[i][1],
                  data.mean[i][2], data.sem[i][2]);
    os << buf;
  }
}

}  // namespace qleak
