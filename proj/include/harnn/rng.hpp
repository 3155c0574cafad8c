// Deterministic pseudo-randomness.
//
// The generator is xoshiro256++ (Blackman & Vigna), seeded through
// splitmix64. It is fixed by contract: the same 64-bit seed produces the
// same stream on every platform, which is what makes training runs
// reproducible bit-for-bit. Floating-point draws use the usual 53-bit
// mantissa construction, and gaussians come from Box-Muller with a fixed
// two-draw consumption per call, so the stream position never depends on
// cached state.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "harnn/matrix.hpp"

namespace harnn {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 expansion of the seed into the xoshiro state
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// uniform in [0,1), 53-bit resolution
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// uniform in [lo,hi)
  double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

  /// standard Box-Muller; consumes exactly two uniform draws
  double gaussian(double mean, double stddev) {
    const double u1 = 1.0 - next_double();  // (0,1]
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// unbiased integer in [0,n) via rejection
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Fisher-Yates
  template <class T>
  void shuffle(std::vector<T>& xs) {
    if (xs.size() < 2) return;
    for (std::size_t i = xs.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i + 1));
      std::swap(xs[i], xs[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

// Weight initialization range used throughout the network.
inline constexpr double kInitLow = -0.1;
inline constexpr double kInitHigh = 0.1;

/// Matrix with every entry drawn uniformly from [kInitLow, kInitHigh).
inline Matrix uniform_init(Rng& rng, std::size_t rows, std::size_t cols) {
  require(rows > 0 && cols > 0, "uniform_init: dimensions must be positive");
  Matrix m(rows, cols);
  for (double& x : m.values) x = rng.uniform(kInitLow, kInitHigh);
  return m;
}

}  // namespace harnn
