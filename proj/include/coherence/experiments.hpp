#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coherence/analysis.hpp"
#include "coherence/samplers.hpp"

namespace coherence {

/// The two-context burger/fries system built from its joint table. The
/// table's off-block cells equal `table_epsilon`; the on-block cells are
/// 0.175 − ε so the table sums to 1.
MixtureBayesSystem sauces_system(double table_epsilon = 0.0);

/// Random latent mixture with symmetric Dirichlet draws for the latent
/// weights and for every (latent, context) emission row. Contexts are named
/// s0..s{n-1}, behaviors s{c}_b{a}.
MixtureBayesSystem random_mixture(Rng& rng, std::size_t num_contexts, std::size_t behaviors_per_context,
                                  std::size_t num_latents, double latent_concentration,
                                  double emission_concentration);

/// Mixture where every context shares the same per-latent emission row.
MixtureBayesSystem exchangeable_mixture(Rng& rng, std::size_t num_contexts, std::size_t behaviors_per_context,
                                        std::size_t num_latents, double latent_concentration,
                                        double emission_concentration);

/// Exact draw from X^1 (the joint of the mixture) by ancestral sampling.
DPolicy sample_from_joint(const MixtureBayesSystem& system, Rng& rng);

struct ScenarioSpec {
  std::size_t num_contexts = 12;
  std::size_t behaviors_per_context = 3;
  std::size_t num_latents = 2;
  double latent_concentration = 1.0;
  double emission_concentration = 0.5;
  double supervised_fraction = 0.5;
  std::optional<std::size_t> supervised_count;  // overrides the fraction
  double mismatch = 0.0;  // per-context probability of replacing a π* label with a uniform draw
  std::uint64_t seed = 0;
};

struct Scenario {
  MixtureBayesSystem system;
  DPolicy ground_truth;
  std::vector<std::size_t> supervised;    // S_b, ascending
  std::vector<std::size_t> unsupervised;  // S_a, ascending
  std::uint64_t seed = 0;

  /// Σ_{s ∈ S_b} π*(s).
  PolicyState supervised_state() const;
};

/// Deterministic per seed. Throws CapExceeded when the latent tables would
/// be unreasonably large (more than the default cap entries).
Scenario generate_scenario(const ScenarioSpec& spec);

enum class Method { Gibbs, TfGibbs, Bootstrap, Icm, SrmExhaustive, Erm };
std::string to_string(Method method);
Method parse_method(const std::string& text);

enum class Selection {
  Best,   // highest posttrain coherence visited, earliest on ties
  Final,  // last policy of the trajectory
};

struct SemiSupervisedConfig {
  SamplerConfig sampler;
  Selection selection = Selection::Best;
  std::size_t icm_max_iters = 100;
  std::size_t icm_restarts = 8;
  double delta = 0.1;
  SignConvention sign = SignConvention::Corrected;
};

struct SemiSupervisedReport {
  Method method = Method::Erm;
  std::uint64_t seed = 0;
  DPolicy policy;
  std::optional<double> accuracy;  // on S_a; empty when S_a is empty
  double coherence = 0.0;              // χ_0(π)
  double posttrain_coherence = 0.0;    // χ^a(π(S_a)) anchored at π*(S_b)
  double pretrain_coherence = 0.0;     // χ̂_0[π(S_b)]
  double mutual_predictability = 0.0;  // over S_a with the supervised prior
  double decomposition_residual = 0.0;
  BoundReport generalization;  // uniform-convergence bound, N = |S_b|
  double optimality_gap = 0.0;  // G(supervised prior; π*)
  double runtime_seconds = 0.0;
};

/// Per-context argmax of σ(supervised prior, s) on S_a, lowest index on ties.
DPolicy greedy_baseline(const Scenario& scenario);

/// Per-context argmax of σ(0, s) on S_a, ignoring the supervised labels.
DPolicy marginal_baseline(const Scenario& scenario);

/// Fixes π(S_b) to the supervised labels, optimizes π(S_a) with the chosen
/// method, and scores the result against π* on S_a.
SemiSupervisedReport run_semi_supervised(const Scenario& scenario, Method method,
                                         const SemiSupervisedConfig& config);

struct EquivalenceConfig {
  ScenarioSpec family;                     // num_contexts fixed; split varies
  std::vector<std::size_t> lattice;        // |S_a| values
  std::vector<std::uint64_t> seeds;
  double delta = 0.1;
  SignConvention sign = SignConvention::Corrected;
};

struct EquivalenceRow {
  std::size_t posttrain_count = 0;
  double coherence_accuracy = 0.0;  // formulation (i): argmax χ^a with supervised prior
  double srm_accuracy = 0.0;        // formulation (ii): SRM over A^S
  double mean_gap = 0.0;            // mean |acc_i − acc_ii| over seeds
  double recommended_count = 0.0;   // mean conjectured |S_a| over seeds where defined, NaN otherwise
  std::size_t seeds = 0;
};

struct EquivalenceTable {
  std::vector<EquivalenceRow> rows;
  std::size_t argmin_posttrain_count = 0;
  TernarySearchResult bracket;  // ternary search over lattice positions on −mean_gap
};

/// Accuracy of formulation (i) and (ii) on a single scenario.
std::pair<double, double> equivalence_point(const Scenario& scenario, double delta, SignConvention sign);

EquivalenceTable equivalence_study(const EquivalenceConfig& config);

struct BoundTrial {
  std::uint64_t seed = 0;
  bool violated = false;
  bool paper_violated = false;
  double max_gap = 0.0;       // largest |α − α_train| over the policy space
  double bound_at_max = 0.0;  // corrected bound of the policy attaining max_gap
  double min_slack = 0.0;     // min over π of bound − gap (corrected)
  double srm_accuracy = 0.0;  // α(π̂; π*) of the SRM choice with prior 0
  double accuracy_bound = 0.0;  // accuracy lower bound from G(0; π*), corrected sign
  bool accuracy_violated = false;
};

struct BoundMonteCarloConfig {
  std::size_t trials = 1000;
  std::size_t num_contexts = 4;
  std::size_t behaviors_per_context = 3;
  std::size_t num_latents = 2;
  std::size_t train_samples = 50;
  double delta = 0.1;
  std::uint64_t seed = 0;
};

struct BoundMonteCarloSummary {
  std::vector<BoundTrial> trials;
  double corrected_hold_rate = 0.0;
  double paper_hold_rate = 0.0;
  double accuracy_hold_rate = 0.0;  // α(π̂; π*) ≥ accuracy lower bound
};

/// Checks the uniform-convergence event for every d-policy simultaneously on
/// independent seeded trials. A negative paper-sign radicand counts as a zero
/// bound. Each trial also checks the SRM choice against the accuracy bound.
BoundMonteCarloSummary bound_monte_carlo(const BoundMonteCarloConfig& config);

struct IdentitySweepReport {
  std::size_t cases = 0;
  double chain_rule = 0.0;        // max residuals over all cases
  double order_invariance = 0.0;
  double change_of_prior = 0.0;
  double decomposition = 0.0;
  std::size_t indeterminate = 0;  // checks where exactly one side was −inf

  bool passed(double tolerance) const;
};

/// Chain rule, order invariance, change of prior and the pretrain/posttrain
/// decomposition on `cases` seeded random positive mixtures with random
/// priors, policies and splits.
IdentitySweepReport identity_sweeps(std::size_t cases, std::uint64_t seed);

/// One-sided exact sign test p-value for "wins > losses" (ties dropped).
double sign_test_p_value(std::size_t wins, std::size_t losses);

}  // namespace coherence
