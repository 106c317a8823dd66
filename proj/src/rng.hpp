#pragma once

#include <cstdint>
#include <initializer_list>

namespace qleak {

// Counter-based random stream. Each draw hashes (key, counter) with the
// splitmix64 finalizer, so streams are stateless apart from the counter and
// any (key, index) pair addresses the same values regardless of which thread
// or order produced neighbouring streams.
class RngStream {
 public:
  explicit RngStream(uint64_t key) : key_(key) {}

  // Fold a seed and a path of indices into a stream key. Used to give every
  // (length index, sequence index, purpose) tuple its own independent stream.
  static uint64_t derive(uint64_t seed, std::initializer_list<uint64_t> path);

  uint64_t next_u64();
  double uniform();                    // [0, 1)
  double normal();                     // standard normal, Box-Muller
  uint32_t uniform_int(uint32_t bound);  // [0, bound), unbiased

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace qleak
