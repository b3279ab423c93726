#pragma once

#include <cmath>
#include <cstdint>

namespace genet {

// SplitMix64. Fully specified, so seeded streams are identical on every
// platform; std::uniform_real_distribution makes no such promise.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // in [0, n)
  uint64_t uniform_index(uint64_t n) { return n ? next_u64() % n : 0; }

  double normal() {
    // Box-Muller; one value per call keeps the stream layout obvious.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Independent stream for a sub-task; decorrelates without sharing state.
  Rng fork(uint64_t tag) { return Rng(next_u64() ^ (tag * 0x9e3779b97f4a7c15ULL)); }

 private:
  uint64_t state_;
};

}  // namespace genet
