#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coherence/system.hpp"

namespace coherence {

/// Base-2 log probability of a behavior sequence; always <= 0.
/// Negative infinity is an ordinary value here: `failed_step` records the
/// first step whose predictive probability was zero (or whose conditioning
/// state was degenerate).
struct CoherenceValue {
  double bits = 0.0;
  std::optional<std::size_t> failed_step;

  bool finite() const { return bits > -kInfinity; }
  /// Description length in bits.
  double description_length() const { return -bits; }
};

/// Σ_n log2 σ(prior + Σ_{m<n} a_m, s_n)(a_n).
CoherenceValue sequence_coherence(const MixtureBayesSystem& system, const PolicyState& prior,
                                  std::span<const Observation> behaviors);

/// Coherence of a full d-policy, contexts taken in index order.
CoherenceValue coherence(const MixtureBayesSystem& system, const PolicyState& prior, const DPolicy& policy);

/// Coherence with the contexts visited in `order` (a permutation of all contexts).
CoherenceValue coherence(const MixtureBayesSystem& system, const PolicyState& prior, const DPolicy& policy,
                         std::span<const std::size_t> order);

enum class Provenance { ExactSoftmax, Empirical, Custom };
std::string to_string(Provenance provenance);

/// Probability table over the enumerated d-policy space (PolicySpace order).
struct PolicyDistribution {
  std::vector<std::size_t> shape;
  std::vector<double> masses;
  Provenance provenance = Provenance::Custom;

  double mass(const DPolicy& policy) const;
};

/// Coherence of every d-policy in PolicySpace order.
std::vector<double> coherence_table(const MixtureBayesSystem& system, const PolicyState& prior,
                                    std::uint64_t cap = PolicySpace::kDefaultCap);

/// X^β(π) ∝ 2^{βχ(π)} by full enumeration; β = +inf gives the uniform
/// distribution over every maximizer within 1e-12 of the maximum.
PolicyDistribution softmax_over_coherence(const MixtureBayesSystem& system, double beta,
                                          std::uint64_t cap = PolicySpace::kDefaultCap);

/// Same, from precomputed coherence values.
PolicyDistribution softmax_from_coherence(std::vector<std::size_t> shape, std::span<const double> chi,
                                          double beta);

/// χ(π) − Σ_s log2 σ(0, s)(π(s)).
double pmi(const MixtureBayesSystem& system, const DPolicy& policy);

/// Post-training a fixed state on a subset of contexts.
struct QuotientSpec {
  std::vector<std::size_t> subset;  // S_a
  PolicyState base_state;           // 0_a

  /// Throws ValidationError on out-of-range or repeated contexts.
  void validate(const ContextPartition& partition) const;
};

/// Coherence of `partial` (exactly one observation per subset context) in
/// the quotient system anchored at `spec.base_state`.
CoherenceValue quotient_coherence(const MixtureBayesSystem& system, const QuotientSpec& spec,
                                  std::span<const Observation> partial);

/// Outcome of an exact identity check. `indeterminate` is set when one side
/// is −∞ and the other is not.
struct Residual {
  double value = 0.0;
  bool indeterminate = false;
};

/// |χ̂_φ[ψ] + χ̂_ρ[φ] − χ̂_ρ[φ ⧺ ψ]| with φ = ρ + Σ phi.
Residual check_change_of_prior(const MixtureBayesSystem& system, const PolicyState& rho,
                               std::span<const Observation> phi, std::span<const Observation> psi);

/// Residuals of both decompositions of χ(π) into pretrain and posttrain
/// terms for S_a = `subset_a` and S_b its complement.
std::pair<Residual, Residual> check_prior_encodes_samples(const MixtureBayesSystem& system,
                                                          const DPolicy& policy,
                                                          std::span<const std::size_t> subset_a);

/// Complement of `subset` in {0..n-1}, ascending.
std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> subset);

/// CSV export: policy,mass,coherence sorted by descending mass then label.
/// With `support_only` zero-mass rows are left out.
void write_distribution_table(std::ostream& out, const ContextPartition& partition,
                              const PolicyDistribution& distribution, std::span<const double> chi,
                              bool support_only = false);

}  // namespace coherence
