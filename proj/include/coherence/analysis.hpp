#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coherence/coherence.hpp"
#include "coherence/samplers.hpp"

namespace coherence {

/// ½ Σ |p − q| over a shared enumerated support.
double tv_distance(const PolicyDistribution& p, const PolicyDistribution& q);

enum class Estimator {
  UniformRound,   // every round 0..N weighted equally
  BurnInThinned,  // drop config.burn_in rounds, keep every config.thin-th
};
std::string to_string(Estimator estimator);
Estimator parse_estimator(const std::string& text);

PolicyDistribution empirical_distribution(const RunRecord& record, const std::vector<std::size_t>& shape,
                                          Estimator estimator = Estimator::UniformRound);

struct AgreementStats {
  double fraction = 0.0;
  std::size_t subset_size = 0;
};

/// Fraction of `subset` contexts where the two policies coincide.
/// Repeated contexts count once per occurrence.
AgreementStats agreement(const DPolicy& first, const DPolicy& second, std::span<const std::size_t> subset);

enum class SignConvention {
  Paper,      // −log2(1/δ) inside the radicand, as printed
  Corrected,  // +log2(1/δ)
};
std::string to_string(SignConvention sign);
SignConvention parse_sign(const std::string& text);

/// A bound value with every input echoed. `valid` is false when the value is
/// outside its meaningful range (negative radicand, vacuous bound).
struct BoundReport {
  std::string kind;
  double value = 0.0;
  bool valid = true;
  std::string note;
  std::vector<std::pair<std::string, double>> inputs;
  std::string sign;  // empty when the bound has no sign switch
};

/// √((−2χ + log2 e ± log2(1/δ)) / (2N)).
BoundReport uniform_convergence_bound(double chi, std::size_t n, double delta,
                                      SignConvention sign = SignConvention::Corrected);

/// Regularizer of the SRM objective; a negative radicand contributes 0.
double description_length_penalty(double chi, std::size_t n, double delta, SignConvention sign);

/// G(φ; π*) = −2χ_φ(π*) + log2 e; +inf when χ is −inf.
double optimality_gap(const MixtureBayesSystem& system, const PolicyState& prior, const DPolicy& ground_truth);

/// 1 − √((2G ± 2 log2(1/δ)) / N); not clamped.
BoundReport accuracy_lower_bound(double gap, std::size_t n, double delta,
                                 SignConvention sign = SignConvention::Corrected);

struct SrmResult {
  DPolicy policy;
  double objective = 0.0;
  double coherence = 0.0;
  double train_accuracy = 0.0;
  std::size_t candidate_index = 0;
};

/// argmax α_train(π) − reg(π) over `candidates` (all d-policies if empty).
/// Ties go to the higher coherence, then the earlier candidate. With no
/// training samples the objective is the coherence argmax.
SrmResult srm_select(const MixtureBayesSystem& system, const PolicyState& prior,
                     const std::vector<DPolicy>& candidates, std::span<const Observation> train_samples,
                     double delta, SignConvention sign = SignConvention::Corrected,
                     std::uint64_t cap = PolicySpace::kDefaultCap);

/// Entropy in bits.
double distribution_entropy(const PolicyDistribution& q);

struct Divergence {
  double bits = 0.0;
  bool support_violation = false;  // q puts mass where p has none; bits = +inf
};
Divergence distribution_kl(const PolicyDistribution& q, const PolicyDistribution& p);

/// E_Q[α] − √(2 log2(1/δ)/N) + √(2/(N log2(1/δ)))·(H[Q] − KL[Q‖P]),
/// asymptotic form with the vanishing remainder dropped.
BoundReport regularization_bound_rhs(double expected_accuracy, double entropy, double kl, std::size_t n,
                                     double delta);

/// ¼ · (mean_pretrain²/mean_posttrain) · (1/(1−pretrain_error))² · |S_b|,
/// where the mean coherences are per-context averages (≤ 0) and enter with
/// their signs flipped. Conjectural; the report says so.
BoundReport conjectured_posttrain_count(double mean_pretrain_coherence, double mean_posttrain_coherence,
                                        double pretrain_error, std::size_t pretrain_count);

struct TernarySearchResult {
  long argmax = 0;
  long bracket_lo = 0;  // final interval scanned exhaustively
  long bracket_hi = 0;
  std::size_t evaluations = 0;
};

/// Integer ternary search for the maximizer of a unimodal objective on
/// [lo, hi]. Shrinks for at most `iters` rounds, then scans what remains.
/// Ties resolve to the lowest index. Non-finite objective values throw.
TernarySearchResult ternary_search_sample_count(const std::function<double(long)>& objective, long lo, long hi,
                                                std::size_t iters = 64);

}  // namespace coherence
