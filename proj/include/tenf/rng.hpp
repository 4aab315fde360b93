#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tenf {

// Deterministic random source. std::mt19937_64 is bit-stable across
// platforms; the distributions are implemented here because the std::
// distribution adaptors are not.
class Rng {
public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one deviate per call (the cosine branch only, for a fixed
  // consumption pattern).
  double normal(double mean = 0.0, double stddev = 1.0)
  {
    double u1 = uniform();
    while (u1 <= 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) { return n == 0 ? 0 : engine_() % n; }

private:
  std::mt19937_64 engine_;
};

} // namespace tenf
