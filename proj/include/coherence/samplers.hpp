#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coherence/coherence.hpp"
#include "coherence/random.hpp"

namespace coherence {

struct SamplerConfig {
  double beta = 1.0;           // > 0, may be +inf
  std::size_t steps = 1000;    // N >= 1
  std::uint64_t seed = 0;
  double gamma = 0.5;          // retained fraction, training-friendly variant only
  double anchor_weight = 0.0;  // λ in [0,1], training-friendly variant only
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  bool record_coherence = true;

  void validate() const;
};

/// Trajectory π_0..π_N of one sampler run plus per-round metadata.
struct RunRecord {
  std::string method;
  SamplerConfig config;
  std::vector<DPolicy> trajectory;                  // N + 1 entries
  std::vector<double> coherence;                    // per round, empty unless recorded
  std::vector<std::vector<std::size_t>> resampled;  // contexts redrawn to reach round t (empty at t = 0)
  std::size_t moves = 0;                            // rounds whose policy differs from the previous one
  std::vector<std::string> warnings;
};

/// Restricts a sampler to the contexts of `scope.subset`, conditioning every
/// draw on `scope.base_state` in addition to the other active contexts.
/// Without a scope all contexts are active and the base state is empty.
using SamplerScope = std::optional<QuotientSpec>;

/// Gibbs sampling over d-policies: each step picks a context uniformly and
/// redraws it from σ^β of the leave-one-out state.
RunRecord gibbs_run(const MixtureBayesSystem& system, const DPolicy& initial, const SamplerConfig& config,
                    const SamplerScope& scope = std::nullopt);

/// Training-friendly variant: each round keeps a uniformly drawn
/// ⌊γ|S|⌋-subset and redraws every other context from the kept state. With
/// anchor_weight λ > 0 each draw comes from λ·σ^β(φ_0,·) + (1−λ)·σ^β(φ_t,·).
RunRecord training_friendly_gibbs_run(const MixtureBayesSystem& system, const DPolicy& initial,
                                      const SamplerConfig& config, const SamplerScope& scope = std::nullopt);

/// Synchronous two-context debate. Context 0 is "pro", context 1 is "con".
/// π_0 pairs a_pro^(0) ~ σ^β(0, pro) with a_con^(0) ~ σ^β(a_pro^(0), con).
RunRecord debate_run(const MixtureBayesSystem& system, const SamplerConfig& config);

struct BootstrapResult {
  DPolicy policy;
  std::vector<std::size_t> order;
  std::vector<double> step_probability;  // tempered probability of each draw
  double log2_probability = 0.0;         // −inf when aborted
  bool aborted = false;
};

/// Sequential self-conditioning: a_n ~ σ^β(Σ_{m<n} a_m, s_n). An empty
/// `order` draws a uniformly random permutation.
BootstrapResult simple_bootstrap_run(const MixtureBayesSystem& system, std::vector<std::size_t> order,
                                     const SamplerConfig& config, const SamplerScope& scope = std::nullopt);

/// Exact output distribution of simple bootstrap by path enumeration, for a
/// fixed order or (empty `order`) averaged over all permutations.
PolicyDistribution simple_bootstrap_distribution(const MixtureBayesSystem& system,
                                                 const std::vector<std::size_t>& order, double beta,
                                                 std::uint64_t cap = PolicySpace::kDefaultCap);

/// Σ_n log2 σ(Σ_{m≠n} π(s_m), s_n)(π(s_n)), over the scope's active contexts.
double mutual_predictability(const MixtureBayesSystem& system, const DPolicy& policy,
                             const SamplerScope& scope = std::nullopt);

struct IcmResult {
  DPolicy policy;
  double mutual_predictability = 0.0;
  std::size_t iterations = 0;
  bool local_maximum = false;
};

/// Best-improvement coordinate ascent on mutual predictability. Restart 0
/// starts from `initial`, later restarts from uniformly random policies.
IcmResult icm_hill_climb(const MixtureBayesSystem& system, const DPolicy& initial, std::size_t max_iters,
                         std::uint64_t seed, std::size_t restarts = 8, const SamplerScope& scope = std::nullopt);

/// One-step transition probability of the Gibbs kernel, in closed form.
double gibbs_kernel(const MixtureBayesSystem& system, const DPolicy& from, const DPolicy& to, double beta);

}  // namespace coherence
