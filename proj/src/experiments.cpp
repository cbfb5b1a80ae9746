#include "coherence/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "coherence/errors.hpp"

namespace coherence {
namespace {

ContextPartition generic_partition(std::size_t num_contexts, std::size_t behaviors_per_context) {
  if (num_contexts < 1 || behaviors_per_context < 1)
    throw ValidationError("need at least one context and one behavior per context");
  std::vector<std::string> contexts;
  std::vector<std::vector<std::string>> behaviors;
  for (std::size_t c = 0; c < num_contexts; ++c) {
    contexts.push_back("s" + std::to_string(c));
    std::vector<std::string> names;
    for (std::size_t a = 0; a < behaviors_per_context; ++a)
      names.push_back("s" + std::to_string(c) + "_b" + std::to_string(a));
    behaviors.push_back(std::move(names));
  }
  return ContextPartition(std::move(contexts), std::move(behaviors));
}

std::size_t argmax_lowest(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

double accuracy_on(const DPolicy& policy, const DPolicy& truth, std::span<const std::size_t> subset) {
  return agreement(policy, truth, subset).fraction;
}

/// argmax of χ^a over the assignments of `subset`, other contexts taken from `base_policy`.
DPolicy coherence_argmax(const MixtureBayesSystem& system, const DPolicy& base_policy,
                         const std::vector<std::size_t>& subset, const PolicyState& prior) {
  const auto& partition = system.partition();
  std::vector<std::size_t> shape;
  for (auto c : subset) shape.push_back(partition.context_size(c));
  PolicySpace space(shape);
  DPolicy local = space.at(0);
  DPolicy best = base_policy;
  double best_chi = -kInfinity;
  bool have = false;
  std::vector<Observation> obs(subset.size());
  do {
    for (std::size_t i = 0; i < subset.size(); ++i) obs[i] = {subset[i], local[i]};
    const double chi = sequence_coherence(system, prior, obs).bits;
    if (!have || chi > best_chi) {
      have = true;
      best_chi = chi;
      for (std::size_t i = 0; i < subset.size(); ++i) best[subset[i]] = local[i];
    }
  } while (space.next(local));
  return best;
}

}  // namespace

MixtureBayesSystem sauces_system(double table_epsilon) {
  if (!(table_epsilon >= 0.0 && table_epsilon <= 0.175))
    throw ValidationError("sauces epsilon must lie in [0, 0.175]");
  ContextPartition partition({"burger", "fries"}, {{"burger_mayo", "burger_mustard", "burger_other"},
                                                   {"fries_mayo", "fries_ketchup", "fries_other"}});
  const double e = table_epsilon;
  const double block = 0.175 - e;
  // index = burger * 3 + fries
  const std::vector<double> joint = {0.3, e, e,  //
                                     e, block, block,  //
                                     e, block, block};
  return from_joint_table(partition, joint, 0.0);
}

MixtureBayesSystem random_mixture(Rng& rng, std::size_t num_contexts, std::size_t behaviors_per_context,
                                  std::size_t num_latents, double latent_concentration,
                                  double emission_concentration) {
  auto partition = generic_partition(num_contexts, behaviors_per_context);
  if (num_latents < 1) throw ValidationError("need at least one latent");
  auto weights = sample_dirichlet(rng, num_latents, latent_concentration);
  std::vector<std::vector<double>> emissions(num_latents);
  for (auto& table : emissions)
    for (std::size_t c = 0; c < num_contexts; ++c) {
      auto row = sample_dirichlet(rng, behaviors_per_context, emission_concentration);
      table.insert(table.end(), row.begin(), row.end());
    }
  return MixtureBayesSystem(std::move(partition), std::move(weights), std::move(emissions));
}

MixtureBayesSystem exchangeable_mixture(Rng& rng, std::size_t num_contexts, std::size_t behaviors_per_context,
                                        std::size_t num_latents, double latent_concentration,
                                        double emission_concentration) {
  auto partition = generic_partition(num_contexts, behaviors_per_context);
  if (num_latents < 1) throw ValidationError("need at least one latent");
  auto weights = sample_dirichlet(rng, num_latents, latent_concentration);
  std::vector<std::vector<double>> emissions(num_latents);
  for (auto& table : emissions) {
    auto row = sample_dirichlet(rng, behaviors_per_context, emission_concentration);
    for (std::size_t c = 0; c < num_contexts; ++c) table.insert(table.end(), row.begin(), row.end());
  }
  return MixtureBayesSystem(std::move(partition), std::move(weights), std::move(emissions));
}

DPolicy sample_from_joint(const MixtureBayesSystem& system, Rng& rng) {
  std::vector<double> weights(system.num_latents());
  for (std::size_t k = 0; k < weights.size(); ++k) weights[k] = system.latent_weight(k);
  const std::size_t k = sample_categorical(rng, weights);
  const auto& partition = system.partition();
  DPolicy policy;
  policy.choice.resize(partition.num_contexts());
  for (std::size_t c = 0; c < partition.num_contexts(); ++c)
    policy[c] = sample_categorical(rng, system.emission_row(k, c));
  return policy;
}

PolicyState Scenario::supervised_state() const {
  return PolicyState::of(system.partition(), ground_truth, supervised);
}

Scenario generate_scenario(const ScenarioSpec& spec) {
  const std::uint64_t entries = policy_space_size(std::vector<std::size_t>{
      spec.num_latents, spec.num_contexts, spec.behaviors_per_context});
  if (entries > PolicySpace::kDefaultCap) throw CapExceeded("enumeration cap exceeded: scenario tables too large");
  if (!(spec.supervised_fraction >= 0.0 && spec.supervised_fraction <= 1.0))
    throw ValidationError("supervised fraction must lie in [0, 1]");
  if (!(spec.mismatch >= 0.0 && spec.mismatch <= 1.0)) throw ValidationError("mismatch must lie in [0, 1]");

  Rng rng(spec.seed);
  auto system = random_mixture(rng, spec.num_contexts, spec.behaviors_per_context, spec.num_latents,
                               spec.latent_concentration, spec.emission_concentration);
  DPolicy truth = sample_from_joint(system, rng);
  if (spec.mismatch > 0.0)
    for (std::size_t c = 0; c < truth.size(); ++c)
      if (uniform01(rng) < spec.mismatch) truth[c] = uniform_index(rng, spec.behaviors_per_context);

  const std::size_t count =
      spec.supervised_count.value_or(static_cast<std::size_t>(
          std::llround(spec.supervised_fraction * static_cast<double>(spec.num_contexts))));
  if (count > spec.num_contexts) throw ValidationError("supervised count exceeds the number of contexts");
  auto supervised = random_subset(rng, spec.num_contexts, count);
  std::sort(supervised.begin(), supervised.end());
  auto unsupervised = complement(spec.num_contexts, supervised);
  return Scenario{std::move(system), std::move(truth), std::move(supervised), std::move(unsupervised), spec.seed};
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Gibbs: return "gibbs";
    case Method::TfGibbs: return "tf-gibbs";
    case Method::Bootstrap: return "bootstrap";
    case Method::Icm: return "icm";
    case Method::SrmExhaustive: return "srm-exhaustive";
    case Method::Erm: return "erm";
  }
  return "erm";
}

Method parse_method(const std::string& text) {
  for (auto m : {Method::Gibbs, Method::TfGibbs, Method::Bootstrap, Method::Icm, Method::SrmExhaustive,
                 Method::Erm})
    if (to_string(m) == text) return m;
  throw ValidationError("unknown method '" + text + "'");
}

DPolicy greedy_baseline(const Scenario& scenario) {
  const auto prior = scenario.supervised_state();
  DPolicy policy = scenario.ground_truth;
  for (auto c : scenario.unsupervised) policy[c] = argmax_lowest(scenario.system.infer(prior, c));
  return policy;
}

DPolicy marginal_baseline(const Scenario& scenario) {
  const PolicyState zero(scenario.system.partition().num_behaviors());
  DPolicy policy = scenario.ground_truth;
  for (auto c : scenario.unsupervised) policy[c] = argmax_lowest(scenario.system.infer(zero, c));
  return policy;
}

SemiSupervisedReport run_semi_supervised(const Scenario& scenario, Method method,
                                         const SemiSupervisedConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const auto& system = scenario.system;
  const auto& partition = system.partition();
  const auto prior = scenario.supervised_state();
  const QuotientSpec scope{scenario.unsupervised, prior};

  SemiSupervisedReport report;
  report.method = method;
  report.seed = config.sampler.seed;
  DPolicy policy = greedy_baseline(scenario);

  auto pick = [&](const RunRecord& record) {
    if (config.selection == Selection::Final) return record.trajectory.back();
    std::size_t best = 0;
    for (std::size_t t = 1; t < record.coherence.size(); ++t)
      if (record.coherence[t] > record.coherence[best]) best = t;
    return record.trajectory[best];
  };

  if (!scenario.unsupervised.empty()) {
    SamplerConfig sampler = config.sampler;
    sampler.record_coherence = true;
    switch (method) {
      case Method::Gibbs:
        policy = pick(gibbs_run(system, policy, sampler, scope));
        break;
      case Method::TfGibbs:
        policy = pick(training_friendly_gibbs_run(system, policy, sampler, scope));
        break;
      case Method::Bootstrap: {
        auto result = simple_bootstrap_run(system, {}, sampler, scope);
        if (result.aborted) throw DegenerateConditioning("degenerate conditioning during bootstrap");
        for (auto c : scenario.unsupervised) policy[c] = result.policy[c];
        break;
      }
      case Method::Icm:
        policy = icm_hill_climb(system, policy, config.icm_max_iters, sampler.seed, config.icm_restarts, scope)
                     .policy;
        break;
      case Method::SrmExhaustive: {
        auto train = observations_of(scenario.ground_truth, scenario.supervised);
        policy = srm_select(system, PolicyState(partition.num_behaviors()), {}, train, config.delta, config.sign)
                     .policy;
        break;
      }
      case Method::Erm:
        break;
    }
    report.accuracy = accuracy_on(policy, scenario.ground_truth, scenario.unsupervised);
  }

  const PolicyState zero(partition.num_behaviors());
  report.policy = policy;
  report.coherence = coherence(system, zero, policy).bits;
  const QuotientSpec own_anchor{scenario.unsupervised, PolicyState::of(partition, policy, scenario.supervised)};
  report.posttrain_coherence =
      quotient_coherence(system, own_anchor, observations_of(policy, scenario.unsupervised)).bits;
  report.pretrain_coherence =
      sequence_coherence(system, zero, observations_of(policy, scenario.supervised)).bits;
  report.mutual_predictability =
      scenario.unsupervised.empty() ? 0.0 : mutual_predictability(system, policy, scope);
  auto [left, right] = check_prior_encodes_samples(system, policy, scenario.unsupervised);
  report.decomposition_residual = std::max(left.value, right.value);
  report.generalization =
      uniform_convergence_bound(report.coherence, std::max<std::size_t>(scenario.supervised.size(), 1),
                                config.delta, config.sign);
  report.optimality_gap = optimality_gap(system, prior, scenario.ground_truth);
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::pair<double, double> equivalence_point(const Scenario& scenario, double delta, SignConvention sign) {
  if (scenario.unsupervised.empty()) return {std::nan(""), std::nan("")};
  const auto& system = scenario.system;
  const auto prior = scenario.supervised_state();
  DPolicy coherent = coherence_argmax(system, scenario.ground_truth, scenario.unsupervised, prior);
  auto train = observations_of(scenario.ground_truth, scenario.supervised);
  DPolicy srm =
      srm_select(system, PolicyState(system.partition().num_behaviors()), {}, train, delta, sign).policy;
  return {accuracy_on(coherent, scenario.ground_truth, scenario.unsupervised),
          accuracy_on(srm, scenario.ground_truth, scenario.unsupervised)};
}

EquivalenceTable equivalence_study(const EquivalenceConfig& config) {
  if (config.lattice.empty()) throw ValidationError("equivalence study needs a non-empty lattice");
  if (config.seeds.empty()) throw ValidationError("equivalence study needs at least one seed");
  EquivalenceTable table;
  for (auto posttrain : config.lattice) {
    if (posttrain > config.family.num_contexts)
      throw ValidationError("lattice point exceeds the number of contexts");
    EquivalenceRow row;
    row.posttrain_count = posttrain;
    row.seeds = config.seeds.size();
    double recommended = 0.0;
    std::size_t defined = 0;
    for (auto seed : config.seeds) {
      ScenarioSpec spec = config.family;
      spec.seed = seed;
      spec.supervised_count = config.family.num_contexts - posttrain;
      auto scenario = generate_scenario(spec);
      if (posttrain == 0) continue;
      auto [coh, srm] = equivalence_point(scenario, config.delta, config.sign);
      row.coherence_accuracy += coh;
      row.srm_accuracy += srm;
      row.mean_gap += std::abs(coh - srm);

      if (scenario.supervised.empty()) continue;
      const auto& system = scenario.system;
      const auto& truth = scenario.ground_truth;
      const PolicyState zero(system.partition().num_behaviors());
      const QuotientSpec pre_spec{scenario.supervised,
                                  PolicyState::of(system.partition(), truth, scenario.unsupervised)};
      const double pre = quotient_coherence(system, pre_spec, observations_of(truth, scenario.supervised)).bits /
                         double(scenario.supervised.size());
      const double post = sequence_coherence(system, zero, observations_of(truth, scenario.unsupervised)).bits /
                          double(scenario.unsupervised.size());
      std::size_t hits = 0;
      for (auto c : scenario.supervised)
        hits += argmax_lowest(system.infer(pre_spec.base_state, c)) == truth[c];
      const double alpha_b = double(hits) / double(scenario.supervised.size());
      if (alpha_b < 1.0 && post < 0.0 && std::isfinite(pre) && std::isfinite(post)) {
        recommended += conjectured_posttrain_count(pre, post, alpha_b, scenario.supervised.size()).value;
        ++defined;
      }
    }
    if (posttrain > 0) {
      const double n = double(config.seeds.size());
      row.coherence_accuracy /= n;
      row.srm_accuracy /= n;
      row.mean_gap /= n;
    } else {
      row.coherence_accuracy = row.srm_accuracy = std::nan("");
    }
    row.recommended_count = defined ? recommended / double(defined) : std::nan("");
    table.rows.push_back(row);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (table.rows[i].mean_gap < table.rows[best].mean_gap) best = i;
  table.argmin_posttrain_count = table.rows[best].posttrain_count;

  if (table.rows.size() >= 2) {
    table.bracket = ternary_search_sample_count(
        [&](long i) { return -table.rows[static_cast<std::size_t>(i)].mean_gap; }, 0,
        static_cast<long>(table.rows.size()) - 1);
  }
  return table;
}

BoundMonteCarloSummary bound_monte_carlo(const BoundMonteCarloConfig& config) {
  if (config.trials < 1 || config.train_samples < 1) throw ValidationError("need at least one trial and sample");
  BoundMonteCarloSummary summary;
  std::size_t corrected_holds = 0;
  std::size_t paper_holds = 0;
  std::size_t accuracy_holds = 0;
  std::vector<std::size_t> all(config.num_contexts);
  std::iota(all.begin(), all.end(), std::size_t{0});

  for (std::size_t t = 0; t < config.trials; ++t) {
    BoundTrial trial;
    trial.seed = derive_seed(config.seed, t);
    Rng rng(trial.seed);
    auto system =
        random_mixture(rng, config.num_contexts, config.behaviors_per_context, config.num_latents, 1.0, 1.0);
    const DPolicy truth = sample_from_joint(system, rng);
    std::vector<std::size_t> train(config.train_samples);
    for (auto& c : train) c = uniform_index(rng, config.num_contexts);

    const auto chi = coherence_table(system, PolicyState{});
    PolicySpace space(system.partition().shape());
    DPolicy policy = space.at(0);
    trial.min_slack = kInfinity;
    for (std::size_t i = 0; i < space.size(); ++i, space.next(policy)) {
      const double gap = std::abs(accuracy_on(policy, truth, all) - accuracy_on(policy, truth, train));
      const double bound =
          description_length_penalty(chi[i], config.train_samples, config.delta, SignConvention::Corrected);
      const double paper =
          description_length_penalty(chi[i], config.train_samples, config.delta, SignConvention::Paper);
      if (gap > bound) trial.violated = true;
      if (gap > paper) trial.paper_violated = true;
      if (gap > trial.max_gap || i == 0) {
        trial.max_gap = gap;
        trial.bound_at_max = bound;
      }
      trial.min_slack = std::min(trial.min_slack, bound - gap);
    }
    std::vector<Observation> samples;
    for (auto c : train) samples.push_back({c, truth[c]});
    const PolicyState zero(system.partition().num_behaviors());
    const auto srm = srm_select(system, zero, {}, samples, config.delta, SignConvention::Corrected);
    trial.srm_accuracy = accuracy_on(srm.policy, truth, all);
    const auto bound = accuracy_lower_bound(optimality_gap(system, zero, truth), config.train_samples, config.delta,
                                            SignConvention::Corrected);
    trial.accuracy_bound = bound.value;
    trial.accuracy_violated = !(trial.srm_accuracy >= bound.value) && !std::isnan(bound.value);
    accuracy_holds += !trial.accuracy_violated;
    corrected_holds += !trial.violated;
    paper_holds += !trial.paper_violated;
    summary.trials.push_back(trial);
  }
  summary.corrected_hold_rate = double(corrected_holds) / double(config.trials);
  summary.paper_hold_rate = double(paper_holds) / double(config.trials);
  summary.accuracy_hold_rate = double(accuracy_holds) / double(config.trials);
  return summary;
}

double sign_test_p_value(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  // P(X >= wins), X ~ Binomial(n, 1/2), summed in log space.
  double p = 0.0;
  for (std::size_t k = wins; k <= n; ++k)
    p += std::exp(std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) - std::lgamma(double(n - k) + 1) -
                  double(n) * std::log(2.0));
  return std::min(p, 1.0);
}

}  // namespace coherence

namespace coherence {

bool IdentitySweepReport::passed(double tolerance) const {
  return indeterminate == 0 && chain_rule <= tolerance && order_invariance <= tolerance &&
         change_of_prior <= tolerance && decomposition <= tolerance;
}

IdentitySweepReport identity_sweeps(std::size_t cases, std::uint64_t seed) {
  IdentitySweepReport report;
  report.cases = cases;
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng(derive_seed(seed, i));
    const std::size_t n = 2 + uniform_index(rng, 3);
    const std::size_t b = 2 + uniform_index(rng, 3);
    const std::size_t k = 1 + uniform_index(rng, 3);
    auto system = random_mixture(rng, n, b, k, 1.0, 1.0);
    const auto& partition = system.partition();

    DPolicy policy;
    for (std::size_t c = 0; c < n; ++c) policy.choice.push_back(uniform_index(rng, b));
    PolicyState prior(partition.num_behaviors());
    for (std::size_t c = 0; c < n; ++c)
      if (uniform01(rng) < 0.5) prior.add(partition.global_index(c, uniform_index(rng, b)), 1 + uniform_index(rng, 2));

    const std::size_t c1 = uniform_index(rng, n);
    const std::size_t c2 = (c1 + 1 + uniform_index(rng, n - 1)) % n;
    report.chain_rule = std::max(report.chain_rule,
                                 check_chain_rule(system, prior, {c1, uniform_index(rng, b)}, {c2, uniform_index(rng, b)}));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto base = coherence(system, prior, policy);
    const auto permuted = coherence(system, prior, policy, order);
    if (base.finite() != permuted.finite())
      ++report.indeterminate;
    else if (base.finite())
      report.order_invariance = std::max(report.order_invariance, std::abs(base.bits - permuted.bits));

    auto obs = observations_of(policy, order);
    const std::size_t split = uniform_index(rng, n + 1);
    std::span<const Observation> all(obs);
    auto lemma = check_change_of_prior(system, prior, all.first(split), all.subspan(split));
    report.indeterminate += lemma.indeterminate;
    report.change_of_prior = std::max(report.change_of_prior, lemma.value);

    std::vector<std::size_t> subset(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(1 + uniform_index(rng, n)));
    std::sort(subset.begin(), subset.end());
    auto [left, right] = check_prior_encodes_samples(system, policy, subset);
    report.indeterminate += left.indeterminate + right.indeterminate;
    report.decomposition = std::max({report.decomposition, left.value, right.value});
  }
  return report;
}

}  // namespace coherence
