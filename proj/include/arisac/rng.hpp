#pragma once

#include <cstdint>
#include <random>

#include "arisac/types.hpp"

namespace arisac {

// Seedable generator with named sub-streams.  Each channel block draws from
// its own stream derived from (seed, tag), so e.g. adding users never
// perturbs the BS-RIS draw.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  // Deterministic stream derivation (splitmix64 over seed ^ tag mix).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::mt19937_64 stream(std::uint64_t tag) const {
    return std::mt19937_64(derive(seed_, tag));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

// Uniform double in [0,1).  mt19937_64 output is standardized, so this is
// bit-stable across platforms (std::normal_distribution is not).
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller.
inline double gaussian(std::mt19937_64& g) {
  double u1 = uniform01(g);
  while (u1 <= 0.0) u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Circularly-symmetric complex normal CN(0,1).
inline Complex cgaussian(std::mt19937_64& g) {
  const double re = gaussian(g);
  const double im = gaussian(g);
  return Complex(re * M_SQRT1_2, im * M_SQRT1_2);
}

inline CMat cgaussian_matrix(std::mt19937_64& g, int rows, int cols) {
  CMat m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = cgaussian(g);
  return m;
}

}  // namespace arisac
