#include "coherence/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "coherence/errors.hpp"

namespace coherence {
namespace {

constexpr double kArgmaxTolerance = 1e-12;

PolicyState sized(const PolicyState& state, std::size_t num_behaviors) {
  return state.num_behaviors() ? state : PolicyState(num_behaviors);
}

Residual residual_of(double lhs, double rhs) {
  const bool lhs_inf = lhs == -kInfinity;
  const bool rhs_inf = rhs == -kInfinity;
  if (lhs_inf && rhs_inf) return {0.0, false};
  if (lhs_inf || rhs_inf) return {kInfinity, true};
  return {std::abs(lhs - rhs), false};
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

CoherenceValue sequence_coherence(const MixtureBayesSystem& system, const PolicyState& prior,
                                  std::span<const Observation> behaviors) {
  const auto& partition = system.partition();
  PolicyState state = sized(prior, partition.num_behaviors());
  CoherenceValue value;
  for (std::size_t n = 0; n < behaviors.size(); ++n) {
    const auto global = partition.global_index(behaviors[n].context, behaviors[n].behavior);
    double p = 0.0;
    try {
      p = system.infer(state, behaviors[n].context)[behaviors[n].behavior];
    } catch (const DegenerateConditioning&) {
      p = 0.0;
    }
    if (p <= 0.0) return {-kInfinity, n};
    value.bits += std::log2(p);
    state.add(global);
  }
  return value;
}

CoherenceValue coherence(const MixtureBayesSystem& system, const PolicyState& prior, const DPolicy& policy) {
  validate_policy(system.partition(), policy);
  auto obs = observations_of(policy);
  return sequence_coherence(system, prior, obs);
}

CoherenceValue coherence(const MixtureBayesSystem& system, const PolicyState& prior, const DPolicy& policy,
                         std::span<const std::size_t> order) {
  validate_policy(system.partition(), policy);
  std::vector<bool> seen(policy.size(), false);
  if (order.size() != policy.size()) throw ValidationError("context order must be a permutation");
  for (auto c : order) {
    if (c >= seen.size() || seen[c]) throw ValidationError("context order must be a permutation");
    seen[c] = true;
  }
  auto obs = observations_of(policy, order);
  return sequence_coherence(system, prior, obs);
}

std::string to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::ExactSoftmax: return "exact-softmax";
    case Provenance::Empirical: return "empirical";
    case Provenance::Custom: return "custom";
  }
  return "custom";
}

double PolicyDistribution::mass(const DPolicy& policy) const {
  return masses.at(PolicySpace(shape, masses.size()).index_of(policy));
}

std::vector<double> coherence_table(const MixtureBayesSystem& system, const PolicyState& prior,
                                    std::uint64_t cap) {
  PolicySpace space(system.partition().shape(), cap);
  std::vector<double> chi(space.size());
  DPolicy policy = space.at(0);
  for (std::size_t i = 0; i < space.size(); ++i, space.next(policy))
    chi[i] = coherence(system, prior, policy).bits;
  return chi;
}

PolicyDistribution softmax_from_coherence(std::vector<std::size_t> shape, std::span<const double> chi,
                                          double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (chi.empty()) throw ValidationError("empty policy space");
  const double top = *std::max_element(chi.begin(), chi.end());
  if (top == -kInfinity) throw DegenerateConditioning("empty support: every d-policy has coherence -inf");

  PolicyDistribution dist{std::move(shape), std::vector<double>(chi.size(), 0.0), Provenance::ExactSoftmax};
  double total = 0.0;
  for (std::size_t i = 0; i < chi.size(); ++i) {
    double w = 0.0;
    if (std::isinf(beta))
      w = chi[i] >= top - kArgmaxTolerance ? 1.0 : 0.0;
    else if (chi[i] > -kInfinity)
      w = std::exp2(beta * (chi[i] - top));
    dist.masses[i] = w;
    total += w;
  }
  for (double& m : dist.masses) m /= total;
  return dist;
}

PolicyDistribution softmax_over_coherence(const MixtureBayesSystem& system, double beta, std::uint64_t cap) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  auto chi = coherence_table(system, PolicyState{}, cap);
  return softmax_from_coherence(system.partition().shape(), chi, beta);
}

double pmi(const MixtureBayesSystem& system, const DPolicy& policy) {
  const auto& partition = system.partition();
  validate_policy(partition, policy);
  PolicyState empty(partition.num_behaviors());
  double marginal_bits = 0.0;
  for (std::size_t c = 0; c < policy.size(); ++c) {
    double p = system.infer(empty, c)[policy[c]];
    if (p <= 0.0)
      throw ValidationError("pmi undefined: zero marginal probability in context '" + partition.context_name(c) +
                            "'");
    marginal_bits += std::log2(p);
  }
  return coherence(system, empty, policy).bits - marginal_bits;
}

void QuotientSpec::validate(const ContextPartition& partition) const {
  std::vector<bool> seen(partition.num_contexts(), false);
  for (auto c : subset) {
    if (c >= seen.size()) throw ValidationError("quotient subset references an unknown context");
    if (seen[c]) throw ValidationError("quotient subset repeats a context");
    seen[c] = true;
  }
  if (base_state.num_behaviors() && base_state.num_behaviors() != partition.num_behaviors())
    throw ValidationError("quotient base state does not match the behavior space");
}

CoherenceValue quotient_coherence(const MixtureBayesSystem& system, const QuotientSpec& spec,
                                  std::span<const Observation> partial) {
  spec.validate(system.partition());
  if (partial.size() != spec.subset.size())
    throw ValidationError("partial policy must cover exactly the quotient subset");
  for (const auto& o : partial)
    if (std::find(spec.subset.begin(), spec.subset.end(), o.context) == spec.subset.end())
      throw ValidationError("partial policy assigns a context outside the quotient subset");
  for (std::size_t i = 0; i < partial.size(); ++i)
    for (std::size_t j = i + 1; j < partial.size(); ++j)
      if (partial[i].context == partial[j].context)
        throw ValidationError("partial policy assigns a context twice");
  return sequence_coherence(system, spec.base_state, partial);
}

Residual check_change_of_prior(const MixtureBayesSystem& system, const PolicyState& rho,
                               std::span<const Observation> phi, std::span<const Observation> psi) {
  const auto& partition = system.partition();
  PolicyState phi_state = sized(rho, partition.num_behaviors()) + PolicyState::of(partition, phi);
  std::vector<Observation> joined(phi.begin(), phi.end());
  joined.insert(joined.end(), psi.begin(), psi.end());

  const double lhs = sequence_coherence(system, phi_state, psi).bits + sequence_coherence(system, rho, phi).bits;
  const double rhs = sequence_coherence(system, rho, joined).bits;
  return residual_of(lhs, rhs);
}

std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> subset) {
  std::vector<bool> in(n, false);
  for (auto c : subset) in.at(c) = true;
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < n; ++c)
    if (!in[c]) out.push_back(c);
  return out;
}

std::pair<Residual, Residual> check_prior_encodes_samples(const MixtureBayesSystem& system,
                                                          const DPolicy& policy,
                                                          std::span<const std::size_t> subset_a) {
  const auto& partition = system.partition();
  validate_policy(partition, policy);
  std::vector<std::size_t> a(subset_a.begin(), subset_a.end());
  auto b = complement(partition.num_contexts(), a);
  QuotientSpec spec_a{a, PolicyState::of(partition, policy, b)};
  QuotientSpec spec_b{b, PolicyState::of(partition, policy, a)};
  auto obs_a = observations_of(policy, a);
  auto obs_b = observations_of(policy, b);
  PolicyState zero(partition.num_behaviors());

  const double full = coherence(system, zero, policy).bits;
  const double left =
      quotient_coherence(system, spec_a, obs_a).bits + sequence_coherence(system, zero, obs_b).bits;
  const double right =
      sequence_coherence(system, zero, obs_a).bits + quotient_coherence(system, spec_b, obs_b).bits;
  return {residual_of(left, full), residual_of(right, full)};
}

void write_distribution_table(std::ostream& out, const ContextPartition& partition,
                              const PolicyDistribution& distribution, std::span<const double> chi,
                              bool support_only) {
  PolicySpace space(distribution.shape, distribution.masses.size());
  if (chi.size() != distribution.masses.size()) throw ValidationError("coherence column length mismatch");
  struct Row {
    std::string label;
    double mass;
    double chi;
  };
  std::vector<Row> rows;
  rows.reserve(space.size());
  DPolicy policy = space.at(0);
  for (std::size_t i = 0; i < space.size(); ++i, space.next(policy))
    if (!support_only || distribution.masses[i] > 0.0)
      rows.push_back({policy_label(partition, policy), distribution.masses[i], chi[i]});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    if (x.mass != y.mass) return x.mass > y.mass;
    return x.label < y.label;
  });
  out << "policy,mass,coherence\n";
  for (const auto& row : rows) {
    out << row.label << ',' << format_double(row.mass) << ','
        << (row.chi == -kInfinity ? std::string("-inf") : format_double(row.chi)) << '\n';
  }
}

}  // namespace coherence
