#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace coherence {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent replica seeds from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

double uniform01(Rng& rng);
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Inverse-CDF draw from an (unnormalized is fine) non-negative weight vector.
std::size_t sample_categorical(Rng& rng, std::span<const double> weights);

/// Symmetric Dirichlet draw of dimension n. Infinite concentration yields the
/// uniform vector.
std::vector<double> sample_dirichlet(Rng& rng, std::size_t n, double concentration);

/// Fisher-Yates on the first k positions: returns k distinct indices drawn
/// uniformly from {0..n-1}, in draw order.
std::vector<std::size_t> random_subset(Rng& rng, std::size_t n, std::size_t k);

}  // namespace coherence
