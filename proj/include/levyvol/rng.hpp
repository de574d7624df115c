// Seeded random draws with pinned transforms.
//
// Every distribution here is implemented explicitly (canonical uniform,
// Box-Muller normal, inversion Poisson) so that a given seed produces the
// same stream on every platform and compiler.  Replication streams are
// derived from a master seed with a SplitMix64-style mix, so splitting work
// across any number of workers never changes the draws.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace levyvol {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
  z += kGoldenGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic stream seed for (master, a, b), e.g. (master, point, rep).
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t s = mix64(master);
  s = mix64(s ^ (a * kGoldenGamma));
  s = mix64(s ^ (b * kGoldenGamma));
  return s;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

  /// Uniform on the open interval (0, 1).
  double uniform01() {
    const std::uint64_t x = eng_();
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (cosine branch only; stateless).
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double exponential() { return -std::log(uniform01()); }

  /// Poisson count by inversion of the cdf.  Intended for small means
  /// (lambda * delta in the experiments); guarded for larger ones.
  std::uint64_t poisson(double mean) {
    if (mean < 0) throw std::domain_error("poisson: negative mean");
    if (mean == 0) return 0;
    const double u = uniform01();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
      if (k > 1000000) throw std::runtime_error("poisson: mean too large");
    }
    return k;
  }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace levyvol
