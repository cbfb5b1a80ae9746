#include "coherence/system.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coherence/errors.hpp"

namespace coherence {
namespace {

constexpr double kRowTolerance = 1e-9;
constexpr double kTieTolerance = 1e-12;

double safe_log(double p) { return p > 0.0 ? std::log(p) : -kInfinity; }

void normalize_checked(std::span<double> row, const std::string& what) {
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError(what + ": entries must be finite and >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > kRowTolerance)
    throw ValidationError(what + ": sums to " + std::to_string(total) + ", expected 1");
  for (double& p : row) p /= total;
}

}  // namespace

MixtureBayesSystem::MixtureBayesSystem(ContextPartition partition, std::vector<double> latent_weights,
                                       std::vector<std::vector<double>> emissions)
    : partition_(std::move(partition)), weights_(std::move(latent_weights)) {
  if (weights_.empty()) throw ValidationError("latent_weights: at least one latent is required");
  if (emissions.size() != weights_.size())
    throw ValidationError("emissions: expected one table per latent (" + std::to_string(weights_.size()) + ")");
  normalize_checked(weights_, "latent_weights");

  stride_ = partition_.num_behaviors();
  emissions_.reserve(weights_.size() * stride_);
  for (std::size_t k = 0; k < emissions.size(); ++k) {
    auto& table = emissions[k];
    if (table.size() != stride_)
      throw ValidationError("emissions[" + std::to_string(k) + "]: expected " + std::to_string(stride_) +
                            " entries");
    for (std::size_t c = 0; c < partition_.num_contexts(); ++c) {
      std::span<double> row(table.data() + partition_.offset(c), partition_.context_size(c));
      normalize_checked(row, "emissions[" + std::to_string(k) + "]." + partition_.context_name(c));
    }
    emissions_.insert(emissions_.end(), table.begin(), table.end());
  }

  log_weights_.resize(weights_.size());
  std::transform(weights_.begin(), weights_.end(), log_weights_.begin(), safe_log);
  log_emissions_.resize(emissions_.size());
  std::transform(emissions_.begin(), emissions_.end(), log_emissions_.begin(), safe_log);
}

std::span<const double> MixtureBayesSystem::emission_row(std::size_t k, std::size_t context) const {
  return {emissions_.data() + k * stride_ + partition_.offset(context), partition_.context_size(context)};
}

std::vector<double> MixtureBayesSystem::posterior(const PolicyState& state) const {
  if (state.num_behaviors() != 0 && state.num_behaviors() != stride_)
    throw ValidationError("policy state does not match the system's behavior space");

  std::vector<double> log_post(log_weights_);
  auto counts = state.counts();
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] == 0) continue;
    double n = static_cast<double>(counts[b]);
    for (std::size_t k = 0; k < log_post.size(); ++k) log_post[k] += n * log_emissions_[k * stride_ + b];
  }

  double top = *std::max_element(log_post.begin(), log_post.end());
  if (top == -kInfinity)
    throw DegenerateConditioning("degenerate conditioning: state " + describe_state(partition_, state) +
                                 " has zero likelihood under every latent");

  // Terms more than 745 nats below the maximum underflow to zero.
  double total = 0.0;
  for (double& lp : log_post) total += (lp = std::exp(lp - top));
  for (double& p : log_post) p /= total;
  return log_post;
}

std::vector<double> MixtureBayesSystem::infer(const PolicyState& state, std::size_t context) const {
  if (context >= partition_.num_contexts()) throw ValidationError("context index out of range");
  auto post = posterior(state);
  const std::size_t width = partition_.context_size(context);
  const std::size_t base = partition_.offset(context);
  std::vector<double> out(width, 0.0);
  for (std::size_t k = 0; k < post.size(); ++k) {
    if (post[k] == 0.0) continue;
    const double* row = emissions_.data() + k * stride_ + base;
    for (std::size_t a = 0; a < width; ++a) out[a] += post[k] * row[a];
  }
  double total = 0.0;
  for (double p : out) total += p;
  for (double& p : out) p /= total;
  return out;
}

std::vector<double> temper(std::span<const double> row, double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (row.empty()) throw ValidationError("cannot temper an empty distribution");
  double top = *std::max_element(row.begin(), row.end());
  if (!(top > 0.0)) throw DegenerateConditioning("degenerate conditioning: all masses are zero");

  std::vector<double> out(row.size(), 0.0);
  double total = 0.0;
  if (std::isinf(beta)) {
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i] >= top - kTieTolerance) total += (out[i] = 1.0);
  } else if (beta == 1.0) {
    for (std::size_t i = 0; i < row.size(); ++i) total += (out[i] = row[i]);
  } else {
    const double log_top = std::log(top);
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i] > 0.0) total += (out[i] = std::exp(beta * (std::log(row[i]) - log_top)));
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<double> tempered_infer(const MixtureBayesSystem& system, const PolicyState& state,
                                   std::size_t context, double beta) {
  return temper(system.infer(state, context), beta);
}

MixtureBayesSystem from_joint_table(const ContextPartition& partition, std::span<const double> joint,
                                    double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ValidationError("epsilon must lie in [0, 1)");
  PolicySpace space(partition.shape());
  if (joint.size() != space.size())
    throw ValidationError("joint: expected " + std::to_string(space.size()) + " entries, got " +
                          std::to_string(joint.size()));
  std::vector<double> weights(joint.begin(), joint.end());
  normalize_checked(weights, "joint");

  std::vector<std::vector<double>> emissions(space.size(), std::vector<double>(partition.num_behaviors()));
  DPolicy theta = space.at(0);
  for (std::size_t k = 0; k < space.size(); ++k, space.next(theta)) {
    for (std::size_t c = 0; c < partition.num_contexts(); ++c) {
      const std::size_t width = partition.context_size(c);
      const double spread = width > 1 ? epsilon / static_cast<double>(width - 1) : 0.0;
      const double own = width > 1 ? 1.0 - epsilon : 1.0;
      for (std::size_t a = 0; a < width; ++a)
        emissions[k][partition.offset(c) + a] = (a == theta[c]) ? own : spread;
    }
  }
  MixtureBayesSystem system(partition, std::move(weights), std::move(emissions));
  system.smoothing_ = epsilon;
  return system;
}

double check_chain_rule(const MixtureBayesSystem& system, const PolicyState& state, Observation first,
                        Observation second) {
  const auto& partition = system.partition();
  if (first.context == second.context) throw ValidationError("chain rule check needs two distinct contexts");
  const auto g1 = partition.global_index(first.context, first.behavior);
  const auto g2 = partition.global_index(second.context, second.behavior);

  auto ordered = [&](Observation a, std::size_t ga, Observation b) {
    double pa = system.infer(state, a.context)[a.behavior];
    if (pa == 0.0) return 0.0;
    PolicyState next = state.num_behaviors() ? state : PolicyState(partition.num_behaviors());
    next.add(ga);
    return pa * system.infer(next, b.context)[b.behavior];
  };
  return std::abs(ordered(first, g1, second) - ordered(second, g2, first));
}

ErgodicityReport check_ergodicity(const MixtureBayesSystem& system, std::uint64_t cap) {
  const auto& partition = system.partition();
  PolicySpace space(partition.shape(), cap);
  DPolicy policy = space.at(0);
  do {
    bool positive = false;
    for (std::size_t k = 0; k < system.num_latents() && !positive; ++k) {
      if (system.latent_weight(k) <= 0.0) continue;
      bool all = true;
      for (std::size_t c = 0; c < policy.size() && all; ++c)
        all = system.emission(k, partition.global_index(c, policy[c])) > 0.0;
      positive = all;
    }
    if (!positive) return {false, policy};
  } while (space.next(policy));
  return {true, std::nullopt};
}

}  // namespace coherence
