#pragma once

#include <cstdint>
#include <random>

namespace covsteer {

// SplitMix64 output mixer. Bijective on the 64-bit state, so distinct
// counter values always produce distinct outputs.
inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Child-seed derivation scheme used everywhere a run needs its own seed:
// mix the master with two stream coordinates (e.g. iteration, run index).
// Documented contract: derive_seed(m, a, b) is a pure function, and the
// sequence derive_seed(m, a, 0), derive_seed(m, a, 1), ... is pairwise
// distinct because the final splitmix step walks a strictly increasing
// counter through a bijection.
inline uint64_t derive_seed(uint64_t master, uint64_t a, uint64_t b = 0) {
  uint64_t s = master;
  uint64_t h = splitmix64_next(s);
  s = h ^ (a * 0xD1B54A32D192ED03ULL);
  h = splitmix64_next(s);
  s = h + b * 0x9E3779B97F4A7C15ULL;
  return splitmix64_next(s);
}

// Deterministic RNG wrapper. All uniform draws are implemented here on top
// of mt19937_64 rather than via std distributions, which are
// implementation-defined and would break bit-exact replay across stdlibs.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). Multiply-shift bounding (bias < n / 2^64).
  uint64_t below(uint64_t n) {
    if (n <= 1) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    return static_cast<uint64_t>(m >> 64);
  }

  // Uniform integer in [lo, hi] inclusive.
  uint64_t uniform_int(uint64_t lo, uint64_t hi) {
    return lo + below(hi - lo + 1);
  }

  bool bernoulli(double p) { return next_double() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace covsteer
