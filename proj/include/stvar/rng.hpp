#pragma once

#include <cstdint>
#include <random>

namespace stvar {

/// Seeded random source shared by every stochastic routine.
/// A 64-bit Mersenne twister; all draws are deterministic given the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double chi_squared(double df);
  /// Normal(mean, sd) truncated to (0, inf).
  double truncated_normal_positive(double mean, double sd);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Derives a decorrelated child seed (splitmix64 of seed ^ stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace stvar
