// Deterministic random number utilities. All stochastic behavior in the
// library flows through Rng so that a (seed, consumption order) pair pins
// the result bit-exactly on every platform; the standard <random>
// distributions are avoided because their output is implementation-defined.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace spikeiir {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stable sub-seed derivation: mixes a seed with a purpose tag and indices so
// independent consumers (weight init, shuffling, per-sample encoders, noise)
// never share a stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = seed;
  for (char c : tag) {
    s ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    splitmix64(s);
  }
  s ^= a * 0x9e3779b97f4a7c15ULL;
  splitmix64(s);
  s ^= b * 0xc2b2ae3d27d4eb4fULL;
  splitmix64(s);
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller; consumes exactly two uniforms per call.
  double normal(double mean, double stddev) {
    const double u1 =
        (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n); rejection-free modulo is acceptable here since
  // n is tiny relative to 2^64.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spikeiir
