#include "coherence/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coherence/errors.hpp"

namespace coherence {
namespace {

struct Active {
  std::vector<std::size_t> contexts;
  PolicyState base;
};

Active resolve_scope(const MixtureBayesSystem& system, const SamplerScope& scope) {
  const auto& partition = system.partition();
  if (!scope) {
    std::vector<std::size_t> all(partition.num_contexts());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return {std::move(all), PolicyState(partition.num_behaviors())};
  }
  scope->validate(partition);
  PolicyState base =
      scope->base_state.num_behaviors() ? scope->base_state : PolicyState(partition.num_behaviors());
  return {scope->subset, std::move(base)};
}

double round_coherence(const MixtureBayesSystem& system, const Active& active, const DPolicy& policy) {
  auto obs = observations_of(policy, active.contexts);
  return sequence_coherence(system, active.base, obs).bits;
}

void record_round(RunRecord& record, const MixtureBayesSystem& system, const Active& active,
                  const DPolicy& policy, std::vector<std::size_t> resampled) {
  if (!record.trajectory.empty() && record.trajectory.back() != policy) ++record.moves;
  record.trajectory.push_back(policy);
  record.resampled.push_back(std::move(resampled));
  if (record.config.record_coherence) record.coherence.push_back(round_coherence(system, active, policy));
}

std::vector<double> draw_distribution(const MixtureBayesSystem& system, const PolicyState& state,
                                      std::size_t context, double beta, std::size_t step) {
  try {
    return tempered_infer(system, state, context, beta);
  } catch (const DegenerateConditioning& e) {
    throw DegenerateConditioning(std::string(e.what()) + " (step " + std::to_string(step) + ")");
  }
}

void warn_if_not_positive(RunRecord& record, const MixtureBayesSystem& system) {
  if (std::isinf(record.config.beta)) return;
  try {
    if (!check_ergodicity(system).positive)
      record.warnings.push_back(
          "positivity check failed: the chain may be reducible and can get stuck in an absorbing set");
  } catch (const CapExceeded&) {
    record.warnings.push_back("positivity check skipped: policy space exceeds the enumeration cap");
  }
}

}  // namespace

void SamplerConfig::validate() const {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (steps < 1) throw ValidationError("steps must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");
  if (!(anchor_weight >= 0.0 && anchor_weight <= 1.0)) throw ValidationError("anchor weight must lie in [0, 1]");
  if (thin < 1) throw ValidationError("thin must be at least 1");
}

RunRecord gibbs_run(const MixtureBayesSystem& system, const DPolicy& initial, const SamplerConfig& config,
                    const SamplerScope& scope) {
  config.validate();
  const auto& partition = system.partition();
  validate_policy(partition, initial);
  Active active = resolve_scope(system, scope);
  if (active.contexts.empty()) throw ValidationError("gibbs needs at least one active context");

  RunRecord record{"gibbs", config, {}, {}, {}, 0, {}};
  warn_if_not_positive(record, system);
  record.trajectory.reserve(config.steps + 1);

  // Running state Σ over active contexts plus the base; leave-one-out is a
  // single count update.
  PolicyState state = active.base + PolicyState::of(partition, initial, active.contexts);
  Rng rng(config.seed);
  DPolicy policy = initial;
  record_round(record, system, active, policy, {});
  for (std::size_t t = 0; t < config.steps; ++t) {
    const std::size_t c = active.contexts[uniform_index(rng, active.contexts.size())];
    const std::size_t old_global = partition.global_index(c, policy[c]);
    state.remove(old_global);
    auto dist = draw_distribution(system, state, c, config.beta, t);
    policy[c] = sample_categorical(rng, dist);
    state.add(partition.global_index(c, policy[c]));
    record_round(record, system, active, policy, {c});
  }
  return record;
}

RunRecord training_friendly_gibbs_run(const MixtureBayesSystem& system, const DPolicy& initial,
                                      const SamplerConfig& config, const SamplerScope& scope) {
  config.validate();
  const auto& partition = system.partition();
  validate_policy(partition, initial);
  Active active = resolve_scope(system, scope);
  const std::size_t n = active.contexts.size();
  const auto keep = static_cast<std::size_t>(std::floor(config.gamma * static_cast<double>(n)));
  if (keep < 1) throw ValidationError("floor(gamma * |S|) must be at least 1");

  RunRecord record{"tf-gibbs", config, {}, {}, {}, 0, {}};
  warn_if_not_positive(record, system);
  record.trajectory.reserve(config.steps + 1);

  Rng rng(config.seed);
  DPolicy policy = initial;
  record_round(record, system, active, policy, {});
  std::optional<PolicyState> anchor;
  for (std::size_t t = 0; t < config.steps; ++t) {
    auto picked = random_subset(rng, n, keep);
    std::vector<bool> kept(n, false);
    for (auto i : picked) kept[i] = true;

    PolicyState retained = active.base;
    for (auto i : picked) retained.add(partition.global_index(active.contexts[i], policy[active.contexts[i]]));
    if (!anchor) anchor = retained;

    std::vector<std::size_t> redrawn;
    DPolicy next = policy;
    for (std::size_t i = 0; i < n; ++i) {
      if (kept[i]) continue;
      const std::size_t c = active.contexts[i];
      std::vector<double> dist;
      if (config.anchor_weight == 0.0) {
        dist = draw_distribution(system, retained, c, config.beta, t);
      } else if (config.anchor_weight == 1.0) {
        dist = draw_distribution(system, *anchor, c, config.beta, t);
      } else {
        auto current = draw_distribution(system, retained, c, config.beta, t);
        auto base = draw_distribution(system, *anchor, c, config.beta, t);
        dist.resize(current.size());
        for (std::size_t a = 0; a < dist.size(); ++a)
          dist[a] = config.anchor_weight * base[a] + (1.0 - config.anchor_weight) * current[a];
      }
      next[c] = sample_categorical(rng, dist);
      redrawn.push_back(c);
    }
    policy = std::move(next);
    record_round(record, system, active, policy, std::move(redrawn));
  }
  return record;
}

RunRecord debate_run(const MixtureBayesSystem& system, const SamplerConfig& config) {
  config.validate();
  const auto& partition = system.partition();
  if (partition.num_contexts() != 2)
    throw ValidationError("debate requires exactly two contexts, got " + std::to_string(partition.num_contexts()));
  constexpr std::size_t kPro = 0;
  constexpr std::size_t kCon = 1;

  RunRecord record{"debate", config, {}, {}, {}, 0, {}};
  warn_if_not_positive(record, system);
  record.trajectory.reserve(config.steps + 1);
  Active active = resolve_scope(system, std::nullopt);

  Rng rng(config.seed);
  const PolicyState empty(partition.num_behaviors());
  auto given = [&](std::size_t context, std::size_t behavior) {
    PolicyState s = empty;
    s.add(partition.global_index(context, behavior));
    return s;
  };

  DPolicy policy;
  policy.choice.assign(2, 0);
  policy[kPro] = sample_categorical(rng, draw_distribution(system, empty, kPro, config.beta, 0));
  policy[kCon] = sample_categorical(rng, draw_distribution(system, given(kPro, policy[kPro]), kCon, config.beta, 0));
  record_round(record, system, active, policy, {});

  for (std::size_t t = 0; t < config.steps; ++t) {
    DPolicy next = policy;
    next[kCon] =
        sample_categorical(rng, draw_distribution(system, given(kPro, policy[kPro]), kCon, config.beta, t));
    next[kPro] =
        sample_categorical(rng, draw_distribution(system, given(kCon, policy[kCon]), kPro, config.beta, t));
    policy = std::move(next);
    record_round(record, system, active, policy, {kPro, kCon});
  }
  return record;
}

BootstrapResult simple_bootstrap_run(const MixtureBayesSystem& system, std::vector<std::size_t> order,
                                     const SamplerConfig& config, const SamplerScope& scope) {
  config.validate();
  const auto& partition = system.partition();
  Active active = resolve_scope(system, scope);
  Rng rng(config.seed);
  if (order.empty()) {
    auto perm = random_subset(rng, active.contexts.size(), active.contexts.size());
    for (auto i : perm) order.push_back(active.contexts[i]);
  }
  {
    auto sorted_order = order;
    auto sorted_active = active.contexts;
    std::sort(sorted_order.begin(), sorted_order.end());
    std::sort(sorted_active.begin(), sorted_active.end());
    if (sorted_order != sorted_active)
      throw ValidationError("bootstrap order must visit each active context exactly once");
  }

  BootstrapResult result;
  result.order = order;
  // Contexts outside the scope are left at behavior 0; callers fill them in.
  result.policy.choice.assign(partition.num_contexts(), 0);
  PolicyState state = active.base;
  for (std::size_t n = 0; n < order.size(); ++n) {
    const std::size_t c = order[n];
    std::vector<double> dist;
    try {
      dist = tempered_infer(system, state, c, config.beta);
    } catch (const DegenerateConditioning&) {
      result.step_probability.push_back(0.0);
      result.log2_probability = -kInfinity;
      result.aborted = true;
      return result;
    }
    const std::size_t a = sample_categorical(rng, dist);
    result.policy[c] = a;
    result.step_probability.push_back(dist[a]);
    result.log2_probability += std::log2(dist[a]);
    state.add(partition.global_index(c, a));
  }
  return result;
}

PolicyDistribution simple_bootstrap_distribution(const MixtureBayesSystem& system,
                                                 const std::vector<std::size_t>& order, double beta,
                                                 std::uint64_t cap) {
  const auto& partition = system.partition();
  PolicySpace space(partition.shape(), cap);
  const std::size_t n = partition.num_contexts();

  std::vector<std::vector<std::size_t>> orders;
  if (order.empty()) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    do orders.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i)
      if (sorted.size() != n || sorted[i] != i) throw ValidationError("bootstrap order must be a permutation");
    orders.push_back(order);
  }

  PolicyDistribution dist{partition.shape(), std::vector<double>(space.size(), 0.0), Provenance::Custom};
  const double weight = 1.0 / static_cast<double>(orders.size());
  for (const auto& ord : orders) {
    DPolicy policy = space.at(0);
    for (std::size_t i = 0; i < space.size(); ++i, space.next(policy)) {
      PolicyState state(partition.num_behaviors());
      double p = 1.0;
      for (auto c : ord) {
        std::vector<double> row;
        try {
          row = tempered_infer(system, state, c, beta);
        } catch (const DegenerateConditioning&) {
          p = 0.0;
          break;
        }
        p *= row[policy[c]];
        if (p == 0.0) break;
        state.add(partition.global_index(c, policy[c]));
      }
      dist.masses[i] += weight * p;
    }
  }
  return dist;
}

double mutual_predictability(const MixtureBayesSystem& system, const DPolicy& policy, const SamplerScope& scope) {
  const auto& partition = system.partition();
  validate_policy(partition, policy);
  Active active = resolve_scope(system, scope);
  PolicyState full = active.base + PolicyState::of(partition, policy, active.contexts);
  double total = 0.0;
  for (auto c : active.contexts) {
    PolicyState loo = full;
    loo.remove(partition.global_index(c, policy[c]));
    double p = 0.0;
    try {
      p = system.infer(loo, c)[policy[c]];
    } catch (const DegenerateConditioning&) {
      p = 0.0;
    }
    if (p <= 0.0) return -kInfinity;
    total += std::log2(p);
  }
  return total;
}

IcmResult icm_hill_climb(const MixtureBayesSystem& system, const DPolicy& initial, std::size_t max_iters,
                         std::uint64_t seed, std::size_t restarts, const SamplerScope& scope) {
  if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
  if (restarts < 1) restarts = 1;
  const auto& partition = system.partition();
  validate_policy(partition, initial);
  Active active = resolve_scope(system, scope);
  Rng rng(seed);

  IcmResult best;
  bool have_best = false;
  for (std::size_t r = 0; r < restarts; ++r) {
    DPolicy policy = initial;
    if (r > 0)
      for (auto c : active.contexts) policy[c] = uniform_index(rng, partition.context_size(c));
    double value = mutual_predictability(system, policy, scope);
    std::size_t iters = 0;
    bool local_max = false;
    while (iters < max_iters) {
      ++iters;
      double best_value = value;
      std::optional<DPolicy> best_move;
      for (auto c : active.contexts) {
        for (std::size_t a = 0; a < partition.context_size(c); ++a) {
          if (a == policy[c]) continue;
          DPolicy candidate = policy;
          candidate[c] = a;
          double v = mutual_predictability(system, candidate, scope);
          if (v > best_value) {
            best_value = v;
            best_move = std::move(candidate);
          }
        }
      }
      if (!best_move) {
        local_max = true;
        break;
      }
      policy = std::move(*best_move);
      value = best_value;
    }
    if (!have_best || value > best.mutual_predictability) {
      best = {policy, value, iters, local_max};
      have_best = true;
    }
  }
  return best;
}

double gibbs_kernel(const MixtureBayesSystem& system, const DPolicy& from, const DPolicy& to, double beta) {
  const auto& partition = system.partition();
  validate_policy(partition, from);
  validate_policy(partition, to);
  const std::size_t n = partition.num_contexts();
  std::vector<std::size_t> diff;
  for (std::size_t c = 0; c < n; ++c)
    if (from[c] != to[c]) diff.push_back(c);
  if (diff.size() > 1) return 0.0;

  const PolicyState full = PolicyState::of(partition, from);
  auto conditional = [&](std::size_t c) {
    PolicyState loo = full;
    loo.remove(partition.global_index(c, from[c]));
    return tempered_infer(system, loo, c, beta)[to[c]];
  };
  const double pick = 1.0 / static_cast<double>(n);
  if (diff.size() == 1) return pick * conditional(diff[0]);
  double stay = 0.0;
  for (std::size_t c = 0; c < n; ++c) stay += pick * conditional(c);
  return stay;
}

}  // namespace coherence
