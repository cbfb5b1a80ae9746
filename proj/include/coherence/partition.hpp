#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace coherence {

/// Behaviors grouped into disjoint contexts of competing alternatives.
///
/// Behaviors carry two indices: a local index inside their context and a
/// global index (contexts laid out back to back in declaration order).
/// Every iteration order in the library derives from these indices.
class ContextPartition {
 public:
  ContextPartition() = default;
  ContextPartition(std::vector<std::string> context_names,
                   std::vector<std::vector<std::string>> behavior_names);

  std::size_t num_contexts() const { return context_names_.size(); }
  std::size_t num_behaviors() const { return behavior_names_.size(); }
  std::size_t context_size(std::size_t context) const;
  std::size_t offset(std::size_t context) const { return offsets_.at(context); }

  std::size_t global_index(std::size_t context, std::size_t local) const;
  std::size_t context_of(std::size_t global) const { return context_of_.at(global); }
  std::size_t local_index(std::size_t global) const;

  const std::string& context_name(std::size_t context) const { return context_names_.at(context); }
  const std::string& behavior_name(std::size_t global) const { return behavior_names_.at(global); }
  const std::string& behavior_name(std::size_t context, std::size_t local) const {
    return behavior_names_.at(global_index(context, local));
  }

  std::optional<std::size_t> find_context(const std::string& name) const;
  std::optional<std::size_t> find_behavior(const std::string& name) const;

  /// Number of behaviors per context, in context order.
  std::vector<std::size_t> shape() const;

  bool operator==(const ContextPartition& other) const {
    return context_names_ == other.context_names_ && behavior_names_ == other.behavior_names_ &&
           offsets_ == other.offsets_;
  }

 private:
  std::vector<std::string> context_names_;
  std::vector<std::string> behavior_names_;
  std::vector<std::size_t> offsets_;  // num_contexts + 1 entries
  std::vector<std::size_t> context_of_;
  std::unordered_map<std::string, std::size_t> behavior_lookup_;
  std::unordered_map<std::string, std::size_t> context_lookup_;
};

/// One (context, behavior) observation; `behavior` is local to the context.
struct Observation {
  std::size_t context = 0;
  std::size_t behavior = 0;

  bool operator==(const Observation&) const = default;
};

/// Deterministic policy: exactly one behavior (local index) per context.
struct DPolicy {
  std::vector<std::size_t> choice;

  std::size_t size() const { return choice.size(); }
  std::size_t operator[](std::size_t context) const { return choice[context]; }
  std::size_t& operator[](std::size_t context) { return choice[context]; }

  auto operator<=>(const DPolicy&) const = default;
  bool operator==(const DPolicy&) const = default;
};

/// Throws ValidationError unless `policy` assigns an in-range behavior to
/// every context of `partition`.
void validate_policy(const ContextPartition& partition, const DPolicy& policy);

/// Observations of `policy` restricted to `contexts` (in the given order).
std::vector<Observation> observations_of(const DPolicy& policy, std::span<const std::size_t> contexts);

/// Observations of `policy` over every context in index order.
std::vector<Observation> observations_of(const DPolicy& policy);

/// Behavior names joined with '|', e.g. "burger_mayo|fries_mayo".
std::string policy_label(const ContextPartition& partition, const DPolicy& policy);

/// Parses a comma or '|' separated list of behavior names (one per context,
/// any order) into a d-policy.
DPolicy parse_policy(const ContextPartition& partition, const std::string& text);

/// Multiset of observed behaviors. Addition is multiset union, the empty
/// state is the identity.
class PolicyState {
 public:
  PolicyState() = default;
  explicit PolicyState(std::size_t num_behaviors) : counts_(num_behaviors, 0) {}

  static PolicyState of(const ContextPartition& partition, std::span<const Observation> observations);
  static PolicyState of(const ContextPartition& partition, const DPolicy& policy);
  static PolicyState of(const ContextPartition& partition, const DPolicy& policy,
                        std::span<const std::size_t> contexts);

  std::size_t num_behaviors() const { return counts_.size(); }
  std::uint64_t count(std::size_t global) const { return counts_.at(global); }
  std::uint64_t total() const;
  bool empty() const { return total() == 0; }
  std::span<const std::uint64_t> counts() const { return counts_; }

  void add(std::size_t global, std::uint64_t times = 1);
  /// Throws ValidationError when the behavior is not present.
  void remove(std::size_t global, std::uint64_t times = 1);

  PolicyState& operator+=(const PolicyState& other);
  friend PolicyState operator+(PolicyState lhs, const PolicyState& rhs) {
    lhs += rhs;
    return lhs;
  }
  bool operator==(const PolicyState&) const = default;

 private:
  std::vector<std::uint64_t> counts_;
};

std::string describe_state(const ContextPartition& partition, const PolicyState& state);

/// Mixed-radix enumeration of A^S. Context 0 is the most significant digit.
class PolicySpace {
 public:
  static constexpr std::uint64_t kDefaultCap = 1'000'000;

  /// Throws CapExceeded when the product of context sizes exceeds `cap`.
  explicit PolicySpace(std::vector<std::size_t> shape, std::uint64_t cap = kDefaultCap);

  std::size_t size() const { return size_; }
  const std::vector<std::size_t>& shape() const { return shape_; }

  DPolicy at(std::size_t index) const;
  std::size_t index_of(const DPolicy& policy) const;
  /// Advances `policy` to the next index; returns false after the last one.
  bool next(DPolicy& policy) const;

 private:
  std::vector<std::size_t> shape_;
  std::size_t size_ = 1;
};

/// Size of A^S, saturating at UINT64_MAX.
std::uint64_t policy_space_size(std::span<const std::size_t> shape);

}  // namespace coherence
