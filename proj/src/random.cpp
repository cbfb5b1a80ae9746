#include "coherence/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coherence/errors.hpp"

namespace coherence {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw ValidationError("uniform_index over an empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::size_t sample_categorical(Rng& rng, std::span<const double> weights) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("categorical draw from an all-zero weight vector");
  double u = uniform01(rng) * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last_positive;
}

std::vector<double> sample_dirichlet(Rng& rng, std::size_t n, double concentration) {
  if (!(concentration > 0.0)) throw ValidationError("dirichlet concentration must be positive");
  std::vector<double> out(n, 1.0 / static_cast<double>(n));
  if (std::isinf(concentration)) return out;
  std::gamma_distribution<double> gamma(concentration, 1.0);
  double total = 0.0;
  for (auto& x : out) total += (x = gamma(rng));
  if (total <= 0.0) {
    // Tiny concentrations can underflow every component; fall back to a vertex.
    std::fill(out.begin(), out.end(), 0.0);
    out[uniform_index(rng, n)] = 1.0;
    return out;
  }
  for (auto& x : out) x /= total;
  return out;
}

std::vector<std::size_t> random_subset(Rng& rng, std::size_t n, std::size_t k) {
  if (k > n) throw ValidationError("subset larger than the population");
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(rng, n - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace coherence
