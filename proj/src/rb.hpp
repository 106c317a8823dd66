#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "cliffords.hpp"
#include "qutrit.hpp"

namespace qleak {

struct RBConfig {
  std::vector<int> lengths;   // ascending, nonempty
  int num_sequences = 75;     // K per length
  GateParams gate;
  NoiseParams noise;
  SystemParams sys;
  uint64_t master_seed = 0;
  bool exact_unitary = false;  // abstract 2x2 composition, no pulses, no noise
  int threads = 1;             // 0 = hardware concurrency

  void validate() const;
};

struct RBDataset {
  std::vector<int> lengths;
  std::vector<std::array<double, 3>> mean;  // per length: (P0, P1, P2)
  std::vector<std::array<double, 3>> sem;
  // raw[i][k] = populations of sequence k at lengths[i]
  std::vector<std::vector<std::array<double, 3>>> raw;
};

// Per-sequence stream key; identical scheduling-independent results follow
// from deriving all randomness from (master_seed, length index, seq index).
uint64_t sequence_stream_key(uint64_t master_seed, int length_index, int seq_index);

// One random sequence of m Cliffords plus recovery, starting from |0><0|.
// All randomness (gate draws, quasi-static dephasing offset) comes from the
// stream key.
std::array<double, 3> run_sequence(uint64_t stream_key, int m, const RBConfig& config);

RBDataset rb_sweep(const RBConfig& config);

// P0 after applying [(+pi)(-pi)]^reps from |0> for each detuning.
std::vector<double> pseudo_identity_sweep(std::span<const double> detunings_mhz, int reps,
                                          const GateParams& gp, const NoiseParams& noise,
                                          const SystemParams& sys);

// Qubit-subspace Bloch vector (<X>, <Y>, <Z>) after an X pulse scaled to
// angle f pi, reported without renormalization.
std::vector<std::array<double, 3>> tomography_trajectory(std::span<const double> fractions,
                                                         const GateParams& gp,
                                                         const NoiseParams& noise,
                                                         const SystemParams& sys);

struct RelaxationCurves {
  std::vector<double> delays_us;
  std::vector<std::array<double, 3>> populations;
};
RelaxationCurves relaxation_experiment(int initial_level, std::span<const double> delays_us,
                                       const NoiseParams& noise);

// CSV schema: m, mean_p0, sem_p0, mean_p1, sem_p1, mean_p2, sem_p2
void write_rb_csv(const RBDataset& data, std::ostream& os);

}  // namespace qleak
