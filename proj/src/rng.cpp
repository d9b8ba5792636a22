#include "stvar/rng.hpp"

#include <cmath>

namespace stvar {

std::size_t Rng::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

double Rng::chi_squared(double df) {
  return std::gamma_distribution<double>(0.5 * df, 2.0)(engine_);
}

double Rng::truncated_normal_positive(double mean, double sd) {
  const double alpha = -mean / sd;  // standardized lower bound
  if (alpha <= 0.0) {
    // at least half the mass lies above the bound
    for (;;) {
      const double z = normal();
      if (z > alpha) return mean + sd * z;
    }
  }
  // Robert (1995) exponential rejection sampler for the tail beyond alpha
  const double lambda = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    const double z = alpha - std::log1p(-uniform()) / lambda;
    const double rho = std::exp(-0.5 * (z - lambda) * (z - lambda));
    if (uniform() <= rho) return mean + sd * z;
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace stvar
