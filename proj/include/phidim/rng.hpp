#pragma once

// Counter-based random streams. Every draw is a pure function of
// (key, counter), so any element of a stream can be produced without
// generating its predecessors and parallel trials never share state.
// Only integer arithmetic is used; results are identical on every platform.

#include <cstdint>

namespace phidim::rng {

inline constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 output function.
constexpr uint64_t mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// The counter-th output of the SplitMix64 sequence seeded with key.
constexpr uint64_t bits(uint64_t key, uint64_t counter) {
  return mix64(key + (counter + 1) * kGolden);
}

// Uniform double in [0, 1) with 53 random bits.
constexpr double uniform(uint64_t key, uint64_t counter) {
  return static_cast<double>(bits(key, counter) >> 11) * 0x1.0p-53;
}

// Key for an independent sub-stream, e.g. derive_key(master_seed, trial_id).
constexpr uint64_t derive_key(uint64_t parent, uint64_t id) {
  return mix64(mix64(parent ^ 0x243f6a8885a308d3ULL) + mix64(id + kGolden));
}

// Lemire's multiply-shift reduction of a 64-bit word onto [0, range).
inline uint64_t bounded(uint64_t word, uint64_t range) {
  return static_cast<uint64_t>((static_cast<__uint128_t>(word) * range) >> 64);
}

// Sequential view of a counter stream, for code that consumes draws in order.
class Stream {
 public:
  explicit Stream(uint64_t key, uint64_t start = 0) : key_(key), next_(start) {}

  uint64_t next_bits() { return bits(key_, next_++); }
  double next_uniform() { return uniform(key_, next_++); }
  uint64_t next_below(uint64_t range) { return bounded(next_bits(), range); }

 private:
  uint64_t key_;
  uint64_t next_;
};

}  // namespace phidim::rng
