#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coherence/analysis.hpp"
#include "coherence/experiments.hpp"

namespace coherence {

using Json = nlohmann::ordered_json;

/// Contents of a scenario file. `supervised` lists context indices in file
/// order; it is only meaningful together with a ground truth.
struct ScenarioFile {
  MixtureBayesSystem system;
  std::optional<DPolicy> ground_truth;
  std::vector<std::size_t> supervised;

  /// Full scenario when a ground truth is present, S_a = complement of S_b.
  std::optional<Scenario> scenario() const;
};

/// Layout:
///   {"contexts": [{"name": ..., "behaviors": [...]}, ...],
///    "system": {"type": "mixture", "weights": [...], "emissions": [[[row per context]...] per latent]}
///           or {"type": "joint", "table": [...], "epsilon": ...},
///    "ground_truth": [behavior names, one per context],   (optional)
///    "supervised": [context names]}                        (optional)
/// Unknown keys are rejected; errors name the offending key path.
ScenarioFile parse_scenario(const Json& doc);
ScenarioFile load_scenario(const std::filesystem::path& path);

/// Mixture form; joint-table systems are written as their one-latent-per-policy mixture.
Json scenario_to_json(const MixtureBayesSystem& system, const std::optional<DPolicy>& ground_truth = std::nullopt,
                      const std::vector<std::size_t>& supervised = {});
Json scenario_to_json(const Scenario& scenario);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// %.17g with "inf", "-inf" and "nan" spelled out.
std::string format_number(double value);

/// Numbers that are not finite become the strings "inf", "-inf", "nan".
Json number_json(double value);

/// Tabular trajectory: "# key: value" metadata lines, then
/// round,context_changed,policy,coherence[,f_mp]. `context_changed` lists the
/// redrawn contexts whose behavior changed, joined with '|'.
std::string trajectory_csv(const RunRecord& record, const MixtureBayesSystem& system, const Json& metadata,
                           bool include_f_mp, const SamplerScope& scope = std::nullopt);

Json bound_report_json(const BoundReport& report);

/// One row per trial: seed, both violation flags, gap and bound columns, and
/// the SRM accuracy check.
std::string monte_carlo_csv(const BoundMonteCarloSummary& summary, const Json& metadata);

/// One row per lattice point.
std::string equivalence_csv(const EquivalenceTable& table, const Json& metadata);

/// Per-seed rows: seed,method,accuracy,coherence,posttrain_coherence,
/// pretrain_coherence,f_mp,generalization_bound,optimality_gap[,runtime_s].
std::string semi_supervised_csv(const std::vector<SemiSupervisedReport>& reports, const ContextPartition& partition,
                                const Json& metadata, bool include_runtime);

}  // namespace coherence
