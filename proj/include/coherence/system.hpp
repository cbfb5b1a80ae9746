#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "coherence/partition.hpp"

namespace coherence {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Exact tabular Bayesian learning system over a finite latent mixture.
///
/// The inference function is the posterior predictive
///   infer(state, s)(a) = sum_k P(a | k) * P(k | state),
///   P(k | state) ∝ w_k * prod_b P(b | k)^count(b),
/// evaluated in log space. Values are immutable after construction and safe
/// to share between threads.
class MixtureBayesSystem {
 public:
  /// `emissions[k]` is indexed by global behavior index; each context slice
  /// must be a probability vector. Weights and rows are checked to 1e-9 and
  /// then renormalized exactly.
  MixtureBayesSystem(ContextPartition partition, std::vector<double> latent_weights,
                     std::vector<std::vector<double>> emissions);

  const ContextPartition& partition() const { return partition_; }
  std::size_t num_latents() const { return weights_.size(); }
  double latent_weight(std::size_t k) const { return weights_.at(k); }
  double emission(std::size_t k, std::size_t global) const { return emissions_.at(k * stride_ + global); }
  std::span<const double> emission_row(std::size_t k, std::size_t context) const;

  /// Smoothing used by from_joint_table; 0 for directly specified mixtures.
  double smoothing() const { return smoothing_; }

  /// Normalized posterior over latents. Throws DegenerateConditioning when
  /// every latent gives the state zero likelihood.
  std::vector<double> posterior(const PolicyState& state) const;

  /// Posterior predictive distribution over the behaviors of `context`.
  std::vector<double> infer(const PolicyState& state, std::size_t context) const;

 private:
  friend MixtureBayesSystem from_joint_table(const ContextPartition&, std::span<const double>, double);

  ContextPartition partition_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> emissions_;  // [latent][global behavior]
  std::vector<double> log_emissions_;
  std::size_t stride_ = 0;
  double smoothing_ = 0.0;
};

/// p -> p^beta, renormalized. beta = +inf gives the uniform distribution over
/// the entries within 1e-12 of the maximum.
std::vector<double> temper(std::span<const double> row, double beta);

std::vector<double> tempered_infer(const MixtureBayesSystem& system, const PolicyState& state,
                                   std::size_t context, double beta);

/// Realizes a joint prior over A^S as a mixture with one latent per d-policy.
/// Latent theta emits theta(s) with probability 1 - epsilon and spreads
/// epsilon evenly over the other behaviors of s. `joint` is in PolicySpace
/// order (context 0 most significant).
MixtureBayesSystem from_joint_table(const ContextPartition& partition, std::span<const double> joint,
                                    double epsilon);

/// |σ(φ,s1)(a1)·σ(φ+a1,s2)(a2) − σ(φ,s2)(a2)·σ(φ+a2,s1)(a1)|; behaviors local.
double check_chain_rule(const MixtureBayesSystem& system, const PolicyState& state, Observation first,
                        Observation second);

struct ErgodicityReport {
  bool positive = false;
  std::optional<DPolicy> witness;  // a zero-mass d-policy when !positive
};

/// Sufficient positivity check: every d-policy has strictly positive joint
/// mass. A false result only reports that the positivity check failed.
ErgodicityReport check_ergodicity(const MixtureBayesSystem& system,
                                  std::uint64_t cap = PolicySpace::kDefaultCap);

}  // namespace coherence
