#include "coherence/partition.hpp"

#include <limits>
#include <numeric>
#include <sstream>

#include "coherence/errors.hpp"

namespace coherence {

ContextPartition::ContextPartition(std::vector<std::string> context_names,
                                   std::vector<std::vector<std::string>> behavior_names)
    : context_names_(std::move(context_names)) {
  if (context_names_.empty()) throw ValidationError("partition: at least one context is required");
  if (behavior_names.size() != context_names_.size())
    throw ValidationError("partition: context names and behavior lists differ in length");

  offsets_.push_back(0);
  for (std::size_t c = 0; c < context_names_.size(); ++c) {
    if (!context_lookup_.emplace(context_names_[c], c).second)
      throw ValidationError("partition: duplicate context name '" + context_names_[c] + "'");
    if (behavior_names[c].empty())
      throw ValidationError("partition: context '" + context_names_[c] + "' has no behaviors");
    for (auto& name : behavior_names[c]) {
      if (!behavior_lookup_.emplace(name, behavior_names_.size()).second)
        throw ValidationError("partition: behavior '" + name + "' appears in more than one place");
      behavior_names_.push_back(std::move(name));
      context_of_.push_back(c);
    }
    offsets_.push_back(behavior_names_.size());
  }
}

std::size_t ContextPartition::context_size(std::size_t context) const {
  return offsets_.at(context + 1) - offsets_.at(context);
}

std::size_t ContextPartition::global_index(std::size_t context, std::size_t local) const {
  if (context >= num_contexts() || local >= context_size(context))
    throw ValidationError("behavior index " + std::to_string(local) + " out of range for context " +
                          std::to_string(context));
  return offsets_[context] + local;
}

std::size_t ContextPartition::local_index(std::size_t global) const {
  return global - offsets_.at(context_of_.at(global));
}

std::optional<std::size_t> ContextPartition::find_context(const std::string& name) const {
  auto it = context_lookup_.find(name);
  if (it == context_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> ContextPartition::find_behavior(const std::string& name) const {
  auto it = behavior_lookup_.find(name);
  if (it == behavior_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> ContextPartition::shape() const {
  std::vector<std::size_t> out(num_contexts());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = context_size(c);
  return out;
}

void validate_policy(const ContextPartition& partition, const DPolicy& policy) {
  if (policy.size() != partition.num_contexts())
    throw ValidationError("policy assigns " + std::to_string(policy.size()) + " contexts, partition has " +
                          std::to_string(partition.num_contexts()));
  for (std::size_t c = 0; c < policy.size(); ++c)
    if (policy[c] >= partition.context_size(c))
      throw ValidationError("policy behavior out of range in context '" + partition.context_name(c) + "'");
}

std::vector<Observation> observations_of(const DPolicy& policy, std::span<const std::size_t> contexts) {
  std::vector<Observation> out;
  out.reserve(contexts.size());
  for (auto c : contexts) out.push_back({c, policy.choice.at(c)});
  return out;
}

std::vector<Observation> observations_of(const DPolicy& policy) {
  std::vector<Observation> out(policy.size());
  for (std::size_t c = 0; c < policy.size(); ++c) out[c] = {c, policy[c]};
  return out;
}

std::string policy_label(const ContextPartition& partition, const DPolicy& policy) {
  std::string out;
  for (std::size_t c = 0; c < policy.size(); ++c) {
    if (c) out += '|';
    out += partition.behavior_name(c, policy[c]);
  }
  return out;
}

DPolicy parse_policy(const ContextPartition& partition, const std::string& text) {
  DPolicy policy;
  policy.choice.assign(partition.num_contexts(), std::numeric_limits<std::size_t>::max());
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    auto global = partition.find_behavior(token);
    if (!global) throw ValidationError("unknown behavior '" + token + "'");
    auto c = partition.context_of(*global);
    if (policy[c] != std::numeric_limits<std::size_t>::max())
      throw ValidationError("context '" + partition.context_name(c) + "' assigned twice");
    policy[c] = partition.local_index(*global);
    token.clear();
  };
  for (char ch : text) {
    if (ch == ',' || ch == '|')
      flush();
    else if (ch != ' ')
      token += ch;
  }
  flush();
  for (std::size_t c = 0; c < policy.size(); ++c)
    if (policy[c] == std::numeric_limits<std::size_t>::max())
      throw ValidationError("policy leaves context '" + partition.context_name(c) + "' unassigned");
  return policy;
}

PolicyState PolicyState::of(const ContextPartition& partition, std::span<const Observation> observations) {
  PolicyState state(partition.num_behaviors());
  for (const auto& o : observations) state.add(partition.global_index(o.context, o.behavior));
  return state;
}

PolicyState PolicyState::of(const ContextPartition& partition, const DPolicy& policy) {
  validate_policy(partition, policy);
  PolicyState state(partition.num_behaviors());
  for (std::size_t c = 0; c < policy.size(); ++c) state.add(partition.global_index(c, policy[c]));
  return state;
}

PolicyState PolicyState::of(const ContextPartition& partition, const DPolicy& policy,
                            std::span<const std::size_t> contexts) {
  validate_policy(partition, policy);
  PolicyState state(partition.num_behaviors());
  for (auto c : contexts) state.add(partition.global_index(c, policy[c]));
  return state;
}

std::uint64_t PolicyState::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void PolicyState::add(std::size_t global, std::uint64_t times) { counts_.at(global) += times; }

void PolicyState::remove(std::size_t global, std::uint64_t times) {
  if (counts_.at(global) < times) throw ValidationError("cannot remove a behavior that is not in the state");
  counts_[global] -= times;
}

PolicyState& PolicyState::operator+=(const PolicyState& other) {
  if (counts_.empty()) counts_.assign(other.counts_.size(), 0);
  if (other.counts_.empty()) return *this;
  if (other.counts_.size() != counts_.size())
    throw ValidationError("cannot add policy states over different behavior spaces");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::string describe_state(const ContextPartition& partition, const PolicyState& state) {
  std::ostringstream out;
  out << '{';
  bool first = true;
  for (std::size_t b = 0; b < state.num_behaviors(); ++b) {
    if (state.count(b) == 0) continue;
    if (!first) out << ", ";
    first = false;
    out << partition.behavior_name(b);
    if (state.count(b) > 1) out << " x" << state.count(b);
  }
  out << '}';
  return out.str();
}

std::uint64_t policy_space_size(std::span<const std::size_t> shape) {
  std::uint64_t size = 1;
  for (auto n : shape) {
    if (n == 0) return 0;
    if (size > std::numeric_limits<std::uint64_t>::max() / n) return std::numeric_limits<std::uint64_t>::max();
    size *= n;
  }
  return size;
}

PolicySpace::PolicySpace(std::vector<std::size_t> shape, std::uint64_t cap) : shape_(std::move(shape)) {
  auto total = policy_space_size(shape_);
  if (total > cap)
    throw CapExceeded("enumeration cap exceeded: policy space has " +
                      (total == std::numeric_limits<std::uint64_t>::max() ? std::string("more than 2^64")
                                                                            : std::to_string(total)) +
                      " elements, cap is " + std::to_string(cap));
  size_ = static_cast<std::size_t>(total);
}

DPolicy PolicySpace::at(std::size_t index) const {
  DPolicy policy;
  policy.choice.assign(shape_.size(), 0);
  for (std::size_t c = shape_.size(); c-- > 0;) {
    policy[c] = index % shape_[c];
    index /= shape_[c];
  }
  return policy;
}

std::size_t PolicySpace::index_of(const DPolicy& policy) const {
  if (policy.size() != shape_.size()) throw ValidationError("policy arity does not match the policy space");
  std::size_t index = 0;
  for (std::size_t c = 0; c < shape_.size(); ++c) {
    if (policy[c] >= shape_[c]) throw ValidationError("policy behavior out of range");
    index = index * shape_[c] + policy[c];
  }
  return index;
}

bool PolicySpace::next(DPolicy& policy) const {
  for (std::size_t c = shape_.size(); c-- > 0;) {
    if (++policy[c] < shape_[c]) return true;
    policy[c] = 0;
  }
  return false;
}

}  // namespace coherence
