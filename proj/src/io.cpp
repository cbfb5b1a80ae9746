#include "coherence/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "coherence/errors.hpp"

namespace coherence {
namespace {

namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) fail(path + "." + item.key(), "unknown key");
  }
}

const Json& require(const Json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing required key");
  return *it;
}

std::string as_string(const Json& value, const std::string& path) {
  if (!value.is_string()) fail(path, "expected a string");
  return value.get<std::string>();
}

double as_number(const Json& value, const std::string& path) {
  if (!value.is_number()) fail(path, "expected a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

const Json& as_array(const Json& value, const std::string& path) {
  if (!value.is_array()) fail(path, "expected an array");
  return value;
}

std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

std::vector<double> number_array(const Json& value, const std::string& path, std::size_t expected) {
  as_array(value, path);
  if (value.size() != expected)
    fail(path, "expected " + std::to_string(expected) + " entries, got " + std::to_string(value.size()));
  std::vector<double> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double v = as_number(value[i], at(path, i));
    if (v < 0.0) fail(at(path, i), "probabilities must be non-negative");
    out.push_back(v);
  }
  return out;
}

void check_sum(const std::vector<double>& row, const std::string& path) {
  double total = 0.0;
  for (double v : row) total += v;
  if (std::abs(total - 1.0) > 1e-9) fail(path, "entries must sum to 1 (got " + format_number(total) + ")");
}

ContextPartition parse_partition(const Json& contexts) {
  const std::string path = "contexts";
  as_array(contexts, path);
  if (contexts.empty()) fail(path, "at least one context is required");
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> behaviors;
  for (std::size_t c = 0; c < contexts.size(); ++c) {
    const std::string p = at(path, c);
    check_keys(contexts[c], p, {"name", "behaviors"});
    names.push_back(as_string(require(contexts[c], p, "name"), p + ".name"));
    const auto& list = as_array(require(contexts[c], p, "behaviors"), p + ".behaviors");
    if (list.empty()) fail(p + ".behaviors", "at least one behavior is required");
    std::vector<std::string> row;
    for (std::size_t a = 0; a < list.size(); ++a) row.push_back(as_string(list[a], at(p + ".behaviors", a)));
    behaviors.push_back(std::move(row));
  }
  try {
    return ContextPartition(std::move(names), std::move(behaviors));
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

MixtureBayesSystem parse_system(const Json& node, const ContextPartition& partition) {
  const std::string path = "system";
  if (!node.is_object()) fail(path, "expected an object");
  const std::string type = as_string(require(node, path, "type"), path + ".type");
  if (type == "mixture") {
    check_keys(node, path, {"type", "weights", "emissions"});
    const auto& w = as_array(require(node, path, "weights"), path + ".weights");
    if (w.empty()) fail(path + ".weights", "at least one latent is required");
    auto weights = number_array(w, path + ".weights", w.size());
    check_sum(weights, path + ".weights");
    const std::string ep = path + ".emissions";
    const auto& e = as_array(require(node, path, "emissions"), ep);
    if (e.size() != weights.size())
      fail(ep, "expected one entry per latent (" + std::to_string(weights.size()) + ")");
    std::vector<std::vector<double>> emissions;
    for (std::size_t k = 0; k < e.size(); ++k) {
      const std::string kp = at(ep, k);
      as_array(e[k], kp);
      if (e[k].size() != partition.num_contexts())
        fail(kp, "expected one row per context (" + std::to_string(partition.num_contexts()) + ")");
      std::vector<double> flat;
      for (std::size_t c = 0; c < partition.num_contexts(); ++c) {
        auto row = number_array(e[k][c], at(kp, c), partition.context_size(c));
        check_sum(row, at(kp, c));
        flat.insert(flat.end(), row.begin(), row.end());
      }
      emissions.push_back(std::move(flat));
    }
    return MixtureBayesSystem(partition, std::move(weights), std::move(emissions));
  }
  if (type == "joint") {
    check_keys(node, path, {"type", "table", "epsilon"});
    const std::uint64_t cells = policy_space_size(partition.shape());
    if (cells > PolicySpace::kDefaultCap) throw CapExceeded("system.table: joint table exceeds the enumeration cap");
    auto table = number_array(require(node, path, "table"), path + ".table", cells);
    check_sum(table, path + ".table");
    double epsilon = 0.0;
    if (node.contains("epsilon")) {
      epsilon = as_number(node["epsilon"], path + ".epsilon");
      if (!(epsilon >= 0.0 && epsilon < 1.0)) fail(path + ".epsilon", "must lie in [0, 1)");
    }
    return from_joint_table(partition, table, epsilon);
  }
  fail(path + ".type", "expected \"mixture\" or \"joint\", got \"" + type + "\"");
}

}  // namespace

std::optional<Scenario> ScenarioFile::scenario() const {
  if (!ground_truth) return std::nullopt;
  auto sup = supervised;
  std::sort(sup.begin(), sup.end());
  auto unsup = complement(system.partition().num_contexts(), sup);
  return Scenario{system, *ground_truth, std::move(sup), std::move(unsup), 0};
}

ScenarioFile parse_scenario(const Json& doc) {
  check_keys(doc, "$", {"contexts", "system", "ground_truth", "supervised"});
  auto partition = parse_partition(require(doc, "$", "contexts"));
  ScenarioFile file{parse_system(require(doc, "$", "system"), partition), std::nullopt, {}};
  if (doc.contains("ground_truth")) {
    const auto& g = as_array(doc["ground_truth"], "ground_truth");
    if (g.size() != partition.num_contexts())
      fail("ground_truth", "expected one behavior per context (" + std::to_string(partition.num_contexts()) + ")");
    DPolicy truth;
    for (std::size_t c = 0; c < g.size(); ++c) {
      const std::string name = as_string(g[c], at("ground_truth", c));
      auto global = partition.find_behavior(name);
      if (!global || partition.context_of(*global) != c)
        fail(at("ground_truth", c), "'" + name + "' is not a behavior of context '" + partition.context_name(c) + "'");
      truth.choice.push_back(partition.local_index(*global));
    }
    file.ground_truth = std::move(truth);
  }
  if (doc.contains("supervised")) {
    if (!file.ground_truth) fail("supervised", "requires ground_truth");
    const auto& s = as_array(doc["supervised"], "supervised");
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string name = as_string(s[i], at("supervised", i));
      auto c = partition.find_context(name);
      if (!c) fail(at("supervised", i), "unknown context '" + name + "'");
      if (!seen.insert(*c).second) fail(at("supervised", i), "duplicate context '" + name + "'");
      file.supervised.push_back(*c);
    }
  }
  return file;
}

ScenarioFile load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path.string() + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    return parse_scenario(doc);
  } catch (const ValidationError& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
}

Json scenario_to_json(const MixtureBayesSystem& system, const std::optional<DPolicy>& ground_truth,
                      const std::vector<std::size_t>& supervised) {
  const auto& partition = system.partition();
  Json doc;
  Json contexts = Json::array();
  for (std::size_t c = 0; c < partition.num_contexts(); ++c) {
    Json names = Json::array();
    for (std::size_t a = 0; a < partition.context_size(c); ++a) names.push_back(partition.behavior_name(c, a));
    contexts.push_back({{"name", partition.context_name(c)}, {"behaviors", names}});
  }
  doc["contexts"] = contexts;
  Json weights = Json::array();
  Json emissions = Json::array();
  for (std::size_t k = 0; k < system.num_latents(); ++k) {
    weights.push_back(system.latent_weight(k));
    Json rows = Json::array();
    for (std::size_t c = 0; c < partition.num_contexts(); ++c) {
      auto row = system.emission_row(k, c);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    emissions.push_back(rows);
  }
  doc["system"] = {{"type", "mixture"}, {"weights", weights}, {"emissions", emissions}};
  if (ground_truth) {
    Json g = Json::array();
    for (std::size_t c = 0; c < ground_truth->size(); ++c) g.push_back(partition.behavior_name(c, (*ground_truth)[c]));
    doc["ground_truth"] = g;
    Json s = Json::array();
    for (auto c : supervised) s.push_back(partition.context_name(c));
    doc["supervised"] = s;
  }
  return doc;
}

Json scenario_to_json(const Scenario& scenario) {
  return scenario_to_json(scenario.system, scenario.ground_truth, scenario.supervised);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw ValidationError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Json number_json(double value) {
  if (std::isfinite(value)) return value;
  return format_number(value);
}

namespace {

std::string header(const Json& metadata) {
  std::string out;
  for (const auto& item : metadata.items()) out += "# " + item.key() + ": " + item.value().dump() + "\n";
  return out;
}

}  // namespace

std::string trajectory_csv(const RunRecord& record, const MixtureBayesSystem& system, const Json& metadata,
                           bool include_f_mp, const SamplerScope& scope) {
  const auto& partition = system.partition();
  std::string out = header(metadata);
  out += "round,context_changed,policy,coherence";
  if (include_f_mp) out += ",f_mp";
  out += "\n";
  for (std::size_t t = 0; t < record.trajectory.size(); ++t) {
    const auto& policy = record.trajectory[t];
    std::string changed;
    if (t > 0) {
      for (auto c : record.resampled[t]) {
        if (policy[c] == record.trajectory[t - 1][c]) continue;
        if (!changed.empty()) changed += "|";
        changed += partition.context_name(c);
      }
    }
    out += std::to_string(t) + "," + changed + "," + policy_label(partition, policy) + ",";
    out += t < record.coherence.size() ? format_number(record.coherence[t]) : "";
    if (include_f_mp) out += "," + format_number(mutual_predictability(system, policy, scope));
    out += "\n";
  }
  return out;
}

Json bound_report_json(const BoundReport& report) {
  Json inputs = Json::object();
  for (const auto& [key, value] : report.inputs) inputs[key] = number_json(value);
  Json doc{{"kind", report.kind}, {"value", number_json(report.value)}, {"valid", report.valid}, {"inputs", inputs}};
  if (!report.sign.empty()) doc["sign"] = report.sign;
  if (!report.note.empty()) doc["note"] = report.note;
  return doc;
}

std::string monte_carlo_csv(const BoundMonteCarloSummary& summary, const Json& metadata) {
  std::string out = header(metadata);
  out += "# corrected_hold_rate: " + format_number(summary.corrected_hold_rate) + "\n";
  out += "# paper_hold_rate: " + format_number(summary.paper_hold_rate) + "\n";
  out += "# accuracy_hold_rate: " + format_number(summary.accuracy_hold_rate) + "\n";
  out += "seed,violated,paper_violated,max_gap,bound_at_max,min_slack,srm_accuracy,accuracy_bound,accuracy_violated\n";
  for (const auto& t : summary.trials)
    out += std::to_string(t.seed) + "," + (t.violated ? "1" : "0") + "," + (t.paper_violated ? "1" : "0") + "," +
           format_number(t.max_gap) + "," + format_number(t.bound_at_max) + "," + format_number(t.min_slack) + "," +
           format_number(t.srm_accuracy) + "," + format_number(t.accuracy_bound) + "," +
           (t.accuracy_violated ? "1" : "0") + "\n";
  return out;
}

std::string equivalence_csv(const EquivalenceTable& table, const Json& metadata) {
  std::string out = header(metadata);
  out += "# argmin_posttrain_count: " + std::to_string(table.argmin_posttrain_count) + "\n";
  if (table.rows.size() >= 2)
    out += "# ternary_bracket: " + std::to_string(table.rows[table.bracket.bracket_lo].posttrain_count) + ".." +
           std::to_string(table.rows[table.bracket.bracket_hi].posttrain_count) + " argmax " +
           std::to_string(table.rows[table.bracket.argmax].posttrain_count) + "\n";
  out += "# recommended_count is conjectural\n";
  out += "posttrain_count,coherence_accuracy,srm_accuracy,mean_gap,recommended_count,seeds\n";
  for (const auto& r : table.rows)
    out += std::to_string(r.posttrain_count) + "," + format_number(r.coherence_accuracy) + "," +
           format_number(r.srm_accuracy) + "," + format_number(r.mean_gap) + "," +
           format_number(r.recommended_count) + "," + std::to_string(r.seeds) + "\n";
  return out;
}

std::string semi_supervised_csv(const std::vector<SemiSupervisedReport>& reports, const ContextPartition& partition,
                                const Json& metadata, bool include_runtime) {
  std::string out = header(metadata);
  out += "seed,method,policy,accuracy,coherence,posttrain_coherence,pretrain_coherence,f_mp,generalization_bound,"
         "optimality_gap";
  if (include_runtime) out += ",runtime_s";
  out += "\n";
  for (const auto& r : reports) {
    out += std::to_string(r.seed) + "," + to_string(r.method) + "," + policy_label(partition, r.policy) + "," +
           (r.accuracy ? format_number(*r.accuracy) : "") + "," + format_number(r.coherence) + "," +
           format_number(r.posttrain_coherence) + "," + format_number(r.pretrain_coherence) + "," +
           format_number(r.mutual_predictability) + "," + format_number(r.generalization.value) + "," +
           format_number(r.optimality_gap);
    if (include_runtime) out += "," + format_number(r.runtime_seconds);
    out += "\n";
  }
  return out;
}

}  // namespace coherence
