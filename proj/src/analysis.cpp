#include "coherence/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "coherence/errors.hpp"

namespace coherence {
namespace {

const double kLog2E = std::numbers::log2e;

void check_delta(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ValidationError("delta must lie in (0, 1]");
}

void check_same_support(const PolicyDistribution& p, const PolicyDistribution& q) {
  if (p.shape != q.shape || p.masses.size() != q.masses.size())
    throw ValidationError("distributions are defined over different policy spaces");
}

double signed_log_term(double delta, SignConvention sign) {
  const double l = std::log2(1.0 / delta);
  return sign == SignConvention::Corrected ? l : -l;
}

}  // namespace

double tv_distance(const PolicyDistribution& p, const PolicyDistribution& q) {
  check_same_support(p, q);
  double total = 0.0;
  for (std::size_t i = 0; i < p.masses.size(); ++i) total += std::abs(p.masses[i] - q.masses[i]);
  return 0.5 * total;
}

std::string to_string(Estimator estimator) {
  return estimator == Estimator::UniformRound ? "uniform-round" : "burnin-thinned";
}

Estimator parse_estimator(const std::string& text) {
  if (text == "uniform-round") return Estimator::UniformRound;
  if (text == "burnin-thinned") return Estimator::BurnInThinned;
  throw ValidationError("unknown estimator '" + text + "' (expected uniform-round or burnin-thinned)");
}

PolicyDistribution empirical_distribution(const RunRecord& record, const std::vector<std::size_t>& shape,
                                          Estimator estimator) {
  if (record.trajectory.empty()) throw ValidationError("empty trajectory");
  PolicySpace space(shape);
  PolicyDistribution dist{shape, std::vector<double>(space.size(), 0.0), Provenance::Empirical};
  std::size_t start = 0;
  std::size_t stride = 1;
  if (estimator == Estimator::BurnInThinned) {
    start = std::min(record.config.burn_in, record.trajectory.size() - 1);
    stride = std::max<std::size_t>(record.config.thin, 1);
  }
  std::size_t used = 0;
  for (std::size_t t = start; t < record.trajectory.size(); t += stride) {
    dist.masses[space.index_of(record.trajectory[t])] += 1.0;
    ++used;
  }
  for (double& m : dist.masses) m /= static_cast<double>(used);
  return dist;
}

AgreementStats agreement(const DPolicy& first, const DPolicy& second, std::span<const std::size_t> subset) {
  if (subset.empty()) throw ValidationError("agreement over an empty context subset");
  if (first.size() != second.size()) throw ValidationError("agreement between policies of different arity");
  std::size_t hits = 0;
  for (auto c : subset) {
    if (c >= first.size()) throw ValidationError("agreement subset references an unknown context");
    hits += first[c] == second[c];
  }
  return {static_cast<double>(hits) / static_cast<double>(subset.size()), subset.size()};
}

std::string to_string(SignConvention sign) { return sign == SignConvention::Paper ? "paper" : "corrected"; }

SignConvention parse_sign(const std::string& text) {
  if (text == "paper") return SignConvention::Paper;
  if (text == "corrected") return SignConvention::Corrected;
  throw ValidationError("unknown sign convention '" + text + "' (expected paper or corrected)");
}

BoundReport uniform_convergence_bound(double chi, std::size_t n, double delta, SignConvention sign) {
  if (n < 1) throw ValidationError("N must be at least 1");
  check_delta(delta);
  if (chi > 0.0) throw ValidationError("coherence must be <= 0");
  BoundReport report{"uniform-convergence", 0.0, true, "", {{"chi", chi}, {"N", double(n)}, {"delta", delta}},
                     to_string(sign)};
  const double radicand = (-2.0 * chi + kLog2E + signed_log_term(delta, sign)) / (2.0 * double(n));
  if (radicand < 0.0) {
    report.valid = false;
    report.value = std::nan("");
    report.note = "negative radicand: the printed sign makes the bound undefined for this delta";
    return report;
  }
  report.value = std::sqrt(radicand);
  if (report.value > 1.0) report.note = "vacuous: gap bound exceeds 1";
  return report;
}

double description_length_penalty(double chi, std::size_t n, double delta, SignConvention sign) {
  if (chi == -kInfinity) return kInfinity;
  const double radicand = (-2.0 * chi + kLog2E + signed_log_term(delta, sign)) / (2.0 * double(n));
  return std::sqrt(std::max(radicand, 0.0));
}

double optimality_gap(const MixtureBayesSystem& system, const PolicyState& prior, const DPolicy& ground_truth) {
  auto chi = coherence(system, prior, ground_truth);
  if (!chi.finite()) return kInfinity;
  return -2.0 * chi.bits + kLog2E;
}

BoundReport accuracy_lower_bound(double gap, std::size_t n, double delta, SignConvention sign) {
  if (n < 1) throw ValidationError("N must be at least 1");
  check_delta(delta);
  BoundReport report{"accuracy-lower-bound", 0.0, true, "", {{"G", gap}, {"N", double(n)}, {"delta", delta}},
                     to_string(sign)};
  const double radicand = (2.0 * gap + 2.0 * signed_log_term(delta, sign)) / double(n);
  if (radicand < 0.0) {
    report.valid = false;
    report.value = std::nan("");
    report.note = "negative radicand";
    return report;
  }
  report.value = 1.0 - std::sqrt(radicand);
  if (report.value < 0.0) {
    report.valid = false;
    report.note = "vacuous: bound below 0";
  }
  return report;
}

SrmResult srm_select(const MixtureBayesSystem& system, const PolicyState& prior,
                     const std::vector<DPolicy>& candidates, std::span<const Observation> train_samples,
                     double delta, SignConvention sign, std::uint64_t cap) {
  const auto& partition = system.partition();
  check_delta(delta);
  for (const auto& o : train_samples) partition.global_index(o.context, o.behavior);

  std::vector<DPolicy> pool = candidates;
  if (pool.empty()) {
    PolicySpace space(partition.shape(), cap);
    pool.reserve(space.size());
    DPolicy p = space.at(0);
    do pool.push_back(p);
    while (space.next(p));
  }
  if (pool.empty()) throw ValidationError("srm_select: empty candidate set");

  const std::size_t n = train_samples.size();
  SrmResult best;
  bool have = false;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& policy = pool[i];
    validate_policy(partition, policy);
    const double chi = coherence(system, prior, policy).bits;
    double acc = 0.0;
    double objective = chi;
    if (n > 0) {
      std::size_t hits = 0;
      for (const auto& o : train_samples) hits += policy[o.context] == o.behavior;
      acc = double(hits) / double(n);
      objective = acc - description_length_penalty(chi, n, delta, sign);
    }
    const bool better = !have || objective > best.objective ||
                        (objective == best.objective && chi > best.coherence);
    if (better) {
      best = {policy, objective, chi, acc, i};
      have = true;
    }
  }
  return best;
}

double distribution_entropy(const PolicyDistribution& q) {
  double h = 0.0;
  for (double m : q.masses)
    if (m > 0.0) h -= m * std::log2(m);
  return h;
}

Divergence distribution_kl(const PolicyDistribution& q, const PolicyDistribution& p) {
  check_same_support(q, p);
  double kl = 0.0;
  for (std::size_t i = 0; i < q.masses.size(); ++i) {
    if (q.masses[i] <= 0.0) continue;
    if (p.masses[i] <= 0.0) return {kInfinity, true};
    kl += q.masses[i] * std::log2(q.masses[i] / p.masses[i]);
  }
  return {std::max(kl, 0.0), false};
}

BoundReport regularization_bound_rhs(double expected_accuracy, double entropy, double kl, std::size_t n,
                                     double delta) {
  if (n < 1) throw ValidationError("N must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  const double l = std::log2(1.0 / delta);
  const double nn = double(n);
  BoundReport report{"regularization-rhs", 0.0, true, "asymptotic form: vanishing remainder dropped",
                     {{"expected_accuracy", expected_accuracy}, {"entropy", entropy}, {"kl", kl},
                      {"N", nn}, {"delta", delta}},
                     ""};
  report.value = expected_accuracy - std::sqrt(2.0 * l / nn) + std::sqrt(2.0 / (nn * l)) * (entropy - kl);
  return report;
}

BoundReport conjectured_posttrain_count(double mean_pretrain_coherence, double mean_posttrain_coherence,
                                        double pretrain_error, std::size_t pretrain_count) {
  if (!(pretrain_error >= 0.0 && pretrain_error < 1.0))
    throw ValidationError("pretrain error must lie in [0, 1); the count is undefined at 1");
  if (mean_posttrain_coherence == 0.0) throw ValidationError("mean posttrain coherence must be nonzero");
  const double pre = -mean_pretrain_coherence;
  const double post = -mean_posttrain_coherence;
  const double inv = 1.0 / (1.0 - pretrain_error);
  BoundReport report{"conjectured-posttrain-count", 0.0, true,
                     "conjectural recommendation, not a guarantee",
                     {{"mean_pretrain_coherence", mean_pretrain_coherence},
                      {"mean_posttrain_coherence", mean_posttrain_coherence},
                      {"pretrain_error", pretrain_error},
                      {"pretrain_count", double(pretrain_count)}},
                     ""};
  report.value = 0.25 * (pre * pre / post) * inv * inv * double(pretrain_count);
  if (!(report.value > 0.0)) report.valid = false;
  return report;
}

TernarySearchResult ternary_search_sample_count(const std::function<double(long)>& objective, long lo, long hi,
                                                std::size_t iters) {
  if (!(lo < hi)) throw ValidationError("ternary search needs lo < hi");
  std::map<long, double> cache;
  auto f = [&](long x) {
    auto it = cache.find(x);
    if (it != cache.end()) return it->second;
    const double v = objective(x);
    if (!std::isfinite(v)) throw ValidationError("ternary search objective is not finite at " + std::to_string(x));
    cache.emplace(x, v);
    return v;
  };

  for (std::size_t it = 0; it < iters && hi - lo > 2; ++it) {
    const long third = (hi - lo) / 3;
    const long m1 = lo + third;
    const long m2 = hi - third;
    if (f(m1) < f(m2))
      lo = m1 + 1;
    else
      hi = m2;
  }
  TernarySearchResult result{lo, lo, hi, 0};
  double best = f(lo);
  for (long x = lo + 1; x <= hi; ++x) {
    const double v = f(x);
    if (v > best) {
      best = v;
      result.argmax = x;
    }
  }
  result.evaluations = cache.size();
  return result;
}

}  // namespace coherence
