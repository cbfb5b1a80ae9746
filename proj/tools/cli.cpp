#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <sstream>

#include "coherence/errors.hpp"
#include "coherence/io.hpp"

namespace coherence::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string scenario;
  std::string policy;
  std::string prior;
  std::string initial;
  std::string out = "coherence-out";
  std::string beta = "1";
  std::string format = "tabular";
  std::string method = "gibbs";
  std::string estimator = "uniform-round";
  std::string sign = "corrected";
  std::string selection = "best";
  std::string kind = "uniform-convergence";
  std::string lattice;
  std::string order;
  std::uint64_t seed = 0;
  std::uint64_t cap = PolicySpace::kDefaultCap;
  std::size_t steps = 1000;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  std::size_t samples = 1000;
  std::size_t restarts = 8;
  std::size_t max_iters = 100;
  std::size_t seeds = 10;
  std::size_t jobs = 1;
  std::size_t trials = 1000;
  std::size_t cases = 100;
  std::size_t contexts = 12;
  std::size_t behaviors = 3;
  std::size_t latents = 2;
  std::size_t supervised = 6;
  std::size_t n = 50;
  std::size_t pretrain_count = 0;
  double gamma = 0.5;
  double anchor = 0.0;
  double delta = 0.1;
  double latent_conc = 1.0;
  double emission_conc = 0.5;
  double mismatch = 0.0;
  double tolerance = 1e-10;
  double chi = std::nan("");
  double gap = std::nan("");
  double expected_accuracy = std::nan("");
  double entropy = std::nan("");
  double kl = std::nan("");
  double mean_pretrain = std::nan("");
  double mean_posttrain = std::nan("");
  double pretrain_error = std::nan("");
  bool semi_supervised = false;
  bool timing = false;
  bool f_mp = false;
  bool all_rows = false;
};

double parse_beta(const std::string& text) {
  if (text == "inf" || text == "+inf" || text == "infinity") return kInfinity;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ValidationError("--beta: '" + text + "' is not a number");
  }
  if (used != text.size()) throw ValidationError("--beta: '" + text + "' is not a number");
  if (!(value > 0.0)) throw ValidationError("--beta must be positive");
  return value;
}

std::vector<std::size_t> parse_index_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(token, &used);
    } catch (const std::exception&) {
      throw ValidationError(flag + ": '" + token + "' is not a non-negative integer");
    }
    if (used != token.size() || token[0] == '-')
      throw ValidationError(flag + ": '" + token + "' is not a non-negative integer");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void require_set(double value, const std::string& flag) {
  if (std::isnan(value)) throw ValidationError(flag + " is required for this bound");
}

/// Every option of `sub` except output location and parallelism, with its
/// effective value.
Json config_echo(const CLI::App& sub) {
  Json options = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty() || name == "--help" || name == "--out" || name == "--jobs") continue;
    std::string key = opt->get_lnames().empty() ? name : opt->get_lnames().front();
    if (key == "help") continue;
    if (opt->get_expected_max() == 0) {
      options[key] = opt->count() > 0;
      continue;
    }
    if (opt->count() > 0) {
      const auto& results = opt->results();
      std::string joined;
      for (std::size_t i = 0; i < results.size(); ++i) joined += (i ? "," : "") + results[i];
      options[key] = joined;
    } else {
      options[key] = opt->get_default_str();
    }
  }
  return Json{{"command", sub.get_name()}, {"options", options}};
}

void write_outputs(const fs::path& dir, const CLI::App& sub,
                   const std::vector<std::pair<std::string, std::string>>& files, std::ostream& out) {
  for (const auto& [name, content] : files) {
    write_file_atomic(dir / name, content);
    out << "wrote " << (dir / name).string() << "\n";
  }
  write_file_atomic(dir / "config.json", config_echo(sub).dump(2) + "\n");
}

MixtureBayesSystem load_system(const Options& o) {
  if (o.scenario.empty()) throw ValidationError("--scenario is required");
  return load_scenario(o.scenario).system;
}

PolicyState parse_state(const ContextPartition& partition, const std::string& text) {
  PolicyState state(partition.num_behaviors());
  std::string token;
  std::stringstream ss(text);
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    auto g = partition.find_behavior(token);
    if (!g) throw ValidationError("--prior: unknown behavior '" + token + "'");
    state.add(*g);
  }
  return state;
}

SamplerConfig sampler_config(const Options& o) {
  SamplerConfig c;
  c.beta = parse_beta(o.beta);
  c.steps = o.steps;
  c.seed = o.seed;
  c.gamma = o.gamma;
  c.anchor_weight = o.anchor;
  c.burn_in = o.burn_in;
  c.thin = o.thin;
  c.record_coherence = true;
  c.validate();
  return c;
}

// ---------------------------------------------------------------- coherence

int cmd_coherence(const Options& o, std::ostream& out) {
  auto system = load_system(o);
  const auto& partition = system.partition();
  if (o.policy.empty()) throw ValidationError("--policy is required");
  const DPolicy policy = parse_policy(partition, o.policy);
  const PolicyState prior = parse_state(partition, o.prior);
  const auto chi = coherence(system, prior, policy);
  const double fmp = mutual_predictability(system, policy);
  const double p = pmi(system, policy);
  if (o.format == "json") {
    Json doc{{"policy", policy_label(partition, policy)},
             {"chi", number_json(chi.bits)},
             {"description_length", number_json(chi.description_length())},
             {"f_mp", number_json(fmp)},
             {"pmi", number_json(p)}};
    out << doc.dump(2) << "\n";
  } else {
    out << "policy: " << policy_label(partition, policy) << "\n"
        << "chi: " << format_number(chi.bits) << "\n"
        << "description_length: " << format_number(chi.description_length()) << "\n"
        << "f_mp: " << format_number(fmp) << "\n"
        << "pmi: " << format_number(p) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- enumerate

int cmd_enumerate(const Options& o, const CLI::App& sub, std::ostream& out) {
  auto system = load_system(o);
  const auto& partition = system.partition();
  const double beta = parse_beta(o.beta);
  const PolicyState zero(partition.num_behaviors());
  const auto chi = coherence_table(system, zero, o.cap);
  const auto dist = softmax_from_coherence(partition.shape(), chi, beta);
  std::string content;
  std::string name;
  if (o.format == "json") {
    name = "distribution.json";
    PolicySpace space(partition.shape(), o.cap);
    Json rows = Json::array();
    DPolicy p = space.at(0);
    for (std::size_t i = 0; i < space.size(); ++i, space.next(p))
      if (o.all_rows || dist.masses[i] > 0.0)
        rows.push_back({{"policy", policy_label(partition, p)},
                        {"mass", number_json(dist.masses[i])},
                        {"coherence", number_json(chi[i])}});
    content = Json{{"beta", number_json(beta)}, {"provenance", to_string(dist.provenance)}, {"rows", rows}}.dump(2) +
              "\n";
  } else {
    name = "distribution.csv";
    std::ostringstream ss;
    write_distribution_table(ss, partition, dist, chi, !o.all_rows);
    content = ss.str();
  }
  write_outputs(o.out, sub, {{name, content}}, out);
  return kExitOk;
}

// ---------------------------------------------------------------- run

Json run_metadata(const Options& o, const std::string& method) {
  return Json{{"method", method}, {"seed", o.seed},     {"beta", o.beta},
              {"steps", o.steps}, {"gamma", o.gamma},   {"anchor_weight", o.anchor},
              {"burn_in", o.burn_in}, {"thin", o.thin}, {"estimator", o.estimator}};
}

std::optional<PolicyDistribution> exact_target(const MixtureBayesSystem& system, double beta, std::uint64_t cap,
                                               Json& report) {
  try {
    return softmax_over_coherence(system, beta, cap);
  } catch (const CapExceeded&) {
    report["tv_note"] = "policy space exceeds the enumeration cap; no exact comparison";
    return std::nullopt;
  }
}

int cmd_run_single(const Options& o, const CLI::App& sub, std::ostream& out) {
  auto system = load_system(o);
  const auto& partition = system.partition();
  const SamplerConfig config = sampler_config(o);
  const Estimator estimator = parse_estimator(o.estimator);
  const std::string method = o.method;
  Json report{{"method", method}, {"seed", o.seed}, {"beta", number_json(config.beta)}};
  std::vector<std::pair<std::string, std::string>> files;

  auto initial_policy = [&]() {
    if (!o.initial.empty()) return parse_policy(partition, o.initial);
    SamplerConfig draw = config;
    draw.seed = derive_seed(o.seed, 1);
    auto result = simple_bootstrap_run(system, {}, draw);
    if (result.aborted) throw DegenerateConditioning("could not draw an initial policy with positive mass");
    return result.policy;
  };

  if (method == "gibbs" || method == "tf-gibbs" || method == "debate") {
    RunRecord record;
    if (method == "gibbs")
      record = gibbs_run(system, initial_policy(), config);
    else if (method == "tf-gibbs")
      record = training_friendly_gibbs_run(system, initial_policy(), config);
    else
      record = debate_run(system, config);
    files.emplace_back("trajectory.csv", trajectory_csv(record, system, run_metadata(o, method), o.f_mp));
    report["rounds"] = record.trajectory.size();
    report["moves"] = record.moves;
    report["final_policy"] = policy_label(partition, record.trajectory.back());
    report["final_coherence"] = number_json(record.coherence.back());
    report["warnings"] = record.warnings;
    report["estimator"] = to_string(estimator);
    if (auto exact = exact_target(system, config.beta, o.cap, report))
      report["tv_to_exact"] = tv_distance(empirical_distribution(record, partition.shape(), estimator), *exact);
  } else if (method == "bootstrap") {
    std::vector<std::size_t> order;
    if (!o.order.empty()) {
      std::stringstream ss(o.order);
      std::string token;
      while (std::getline(ss, token, ',')) {
        auto c = partition.find_context(token);
        if (!c) throw ValidationError("--order: unknown context '" + token + "'");
        order.push_back(*c);
      }
    }
    if (o.samples < 1) throw ValidationError("--samples must be at least 1");
    PolicySpace space(partition.shape(), o.cap);
    std::vector<double> counts(space.size(), 0.0);
    std::string csv = "sample,order,policy,log2_probability\n";
    std::size_t aborted = 0;
    for (std::size_t i = 0; i < o.samples; ++i) {
      SamplerConfig draw = config;
      draw.seed = derive_seed(o.seed, i);
      auto result = simple_bootstrap_run(system, order, draw);
      std::string order_label;
      for (std::size_t k = 0; k < result.order.size(); ++k)
        order_label += (k ? "|" : "") + partition.context_name(result.order[k]);
      csv += std::to_string(i) + "," + order_label + "," +
             (result.aborted ? std::string("aborted") : policy_label(partition, result.policy)) + "," +
             format_number(result.log2_probability) + "\n";
      if (result.aborted)
        ++aborted;
      else
        counts[space.index_of(result.policy)] += 1.0;
    }
    files.emplace_back("samples.csv", csv);
    report["samples"] = o.samples;
    report["aborted"] = aborted;
    if (auto exact = exact_target(system, config.beta, o.cap, report)) {
      const double kept = double(o.samples - aborted);
      if (kept > 0) {
        PolicyDistribution empirical{partition.shape(), counts, Provenance::Empirical};
        for (double& m : empirical.masses) m /= kept;
        report["tv_to_exact"] = tv_distance(empirical, *exact);
      }
      report["tv_bootstrap_exact_to_softmax"] =
          tv_distance(simple_bootstrap_distribution(system, order, config.beta, o.cap), *exact);
    }
  } else if (method == "icm") {
    auto result = icm_hill_climb(system, initial_policy(), o.max_iters, o.seed, o.restarts);
    report["policy"] = policy_label(partition, result.policy);
    report["f_mp"] = number_json(result.mutual_predictability);
    report["coherence"] = number_json(coherence(system, PolicyState(partition.num_behaviors()), result.policy).bits);
    report["iterations"] = result.iterations;
    report["local_maximum"] = result.local_maximum;
  } else {
    throw ValidationError("--method '" + method + "' is not available without --semi-supervised");
  }
  files.emplace_back("report.json", report.dump(2) + "\n");
  write_outputs(o.out, sub, files, out);
  return kExitOk;
}

int cmd_run_semi(const Options& o, const CLI::App& sub, std::ostream& out) {
  const Method method = parse_method(o.method);
  SemiSupervisedConfig config;
  config.sampler = sampler_config(o);
  config.selection = o.selection == "final" ? Selection::Final : Selection::Best;
  config.icm_max_iters = o.max_iters;
  config.icm_restarts = o.restarts;
  config.delta = o.delta;
  config.sign = parse_sign(o.sign);
  if (o.seeds < 1) throw ValidationError("--seeds must be at least 1");

  std::optional<Scenario> fixed;
  if (!o.scenario.empty()) {
    fixed = load_scenario(o.scenario).scenario();
    if (!fixed) throw ValidationError("'" + o.scenario + "': semi-supervised runs need ground_truth");
  }

  auto scenario_for = [&](std::uint64_t seed) {
    if (fixed) return *fixed;
    ScenarioSpec spec;
    spec.num_contexts = o.contexts;
    spec.behaviors_per_context = o.behaviors;
    spec.num_latents = o.latents;
    spec.latent_concentration = o.latent_conc;
    spec.emission_concentration = o.emission_conc;
    spec.supervised_count = o.supervised;
    spec.mismatch = o.mismatch;
    spec.seed = seed;
    return generate_scenario(spec);
  };

  struct Result {
    SemiSupervisedReport method;
    SemiSupervisedReport baseline;
  };
  auto run_one = [&](std::uint64_t seed) {
    Scenario scenario = scenario_for(seed);
    SemiSupervisedConfig c = config;
    c.sampler.seed = seed;
    return Result{run_semi_supervised(scenario, method, c), run_semi_supervised(scenario, Method::Erm, c)};
  };

  std::vector<Result> results;
  const std::size_t jobs = std::max<std::size_t>(o.jobs, 1);
  for (std::size_t start = 0; start < o.seeds; start += jobs) {
    std::vector<std::future<Result>> batch;
    for (std::size_t i = start; i < std::min(o.seeds, start + jobs); ++i)
      batch.push_back(std::async(std::launch::async, run_one, o.seed + i));
    for (auto& f : batch) results.push_back(f.get());
  }

  std::vector<SemiSupervisedReport> rows;
  double acc = 0.0, base = 0.0;
  std::size_t wins = 0, losses = 0, ties = 0, scored = 0;
  for (const auto& r : results) {
    rows.push_back(r.method);
    rows.push_back(r.baseline);
    if (!r.method.accuracy) continue;
    ++scored;
    acc += *r.method.accuracy;
    base += *r.baseline.accuracy;
    if (*r.method.accuracy > *r.baseline.accuracy)
      ++wins;
    else if (*r.method.accuracy < *r.baseline.accuracy)
      ++losses;
    else
      ++ties;
  }
  const ContextPartition partition = scenario_for(o.seed).system.partition();
  Json metadata{{"method", to_string(method)}, {"baseline", "erm"}, {"sign", to_string(config.sign)},
                {"delta", o.delta}, {"seed", o.seed}, {"seeds", o.seeds}};
  Json summary{{"method", to_string(method)},
               {"baseline", "erm"},
               {"seeds", o.seeds},
               {"scored", scored},
               {"mean_accuracy", scored ? number_json(acc / double(scored)) : Json(nullptr)},
               {"baseline_mean_accuracy", scored ? number_json(base / double(scored)) : Json(nullptr)},
               {"wins", wins},
               {"losses", losses},
               {"ties", ties},
               {"sign_test_p", sign_test_p_value(wins, losses)},
               {"sign", to_string(config.sign)}};
  write_outputs(o.out, sub,
                {{"semi_supervised.csv", semi_supervised_csv(rows, partition, metadata, o.timing)},
                 {"summary.json", summary.dump(2) + "\n"}},
                out);
  return kExitOk;
}

// ---------------------------------------------------------------- bounds

int cmd_bounds(const Options& o, const CLI::App& sub, std::ostream& out) {
  const SignConvention sign = parse_sign(o.sign);
  BoundReport report;
  if (o.kind == "uniform-convergence") {
    require_set(o.chi, "--chi");
    report = uniform_convergence_bound(o.chi, o.n, o.delta, sign);
  } else if (o.kind == "accuracy-lower-bound") {
    require_set(o.gap, "--gap");
    report = accuracy_lower_bound(o.gap, o.n, o.delta, sign);
  } else if (o.kind == "regularization") {
    require_set(o.expected_accuracy, "--expected-accuracy");
    require_set(o.entropy, "--entropy");
    require_set(o.kl, "--kl");
    report = regularization_bound_rhs(o.expected_accuracy, o.entropy, o.kl, o.n, o.delta);
  } else if (o.kind == "posttrain-count") {
    require_set(o.mean_pretrain, "--mean-pretrain");
    require_set(o.mean_posttrain, "--mean-posttrain");
    require_set(o.pretrain_error, "--pretrain-error");
    report = conjectured_posttrain_count(o.mean_pretrain, o.mean_posttrain, o.pretrain_error, o.pretrain_count);
  } else {
    throw ValidationError("--kind: unknown bound '" + o.kind + "'");
  }
  Json doc = bound_report_json(report);
  if (o.kind != "regularization" && o.kind != "posttrain-count") doc["sign"] = to_string(sign);
  const std::string text = doc.dump(2) + "\n";
  out << text;
  write_outputs(o.out, sub, {{"bounds.json", text}}, out);
  return kExitOk;
}

// ---------------------------------------------------------------- mc

int cmd_mc(const Options& o, const CLI::App& sub, std::ostream& out) {
  if (!(o.delta > 0.0 && o.delta < 1.0)) throw ValidationError("--delta must lie in (0, 1)");
  BoundMonteCarloConfig config;
  config.trials = o.trials;
  config.num_contexts = o.contexts;
  config.behaviors_per_context = o.behaviors;
  config.num_latents = o.latents;
  config.train_samples = o.n;
  config.delta = o.delta;
  config.seed = o.seed;
  auto summary = bound_monte_carlo(config);
  Json metadata{{"trials", o.trials}, {"contexts", o.contexts}, {"behaviors", o.behaviors}, {"latents", o.latents},
                {"N", o.n},           {"delta", o.delta},       {"seed", o.seed}};
  Json doc{{"trials", o.trials},
           {"delta", o.delta},
           {"target", 1.0 - o.delta},
           {"corrected_hold_rate", summary.corrected_hold_rate},
           {"paper_hold_rate", summary.paper_hold_rate},
           {"accuracy_hold_rate", summary.accuracy_hold_rate},
           {"sign_asserted", "corrected"}};
  out << "corrected hold rate: " << format_number(summary.corrected_hold_rate) << "\n"
      << "paper hold rate: " << format_number(summary.paper_hold_rate) << "\n";
  write_outputs(o.out, sub, {{"mc.csv", monte_carlo_csv(summary, metadata)}, {"summary.json", doc.dump(2) + "\n"}},
                out);
  return kExitOk;
}

// ---------------------------------------------------------------- equiv

int cmd_equiv(const Options& o, const CLI::App& sub, std::ostream& out) {
  EquivalenceConfig config;
  config.family.num_contexts = o.contexts;
  config.family.behaviors_per_context = o.behaviors;
  config.family.num_latents = o.latents;
  config.family.latent_concentration = o.latent_conc;
  config.family.emission_concentration = o.emission_conc;
  config.family.mismatch = o.mismatch;
  config.lattice = parse_index_list(o.lattice, "--lattice");
  if (config.lattice.empty())
    for (std::size_t i = 0; i <= o.contexts; ++i) config.lattice.push_back(i);
  for (std::size_t i = 0; i < o.seeds; ++i) config.seeds.push_back(o.seed + i);
  config.delta = o.delta;
  config.sign = parse_sign(o.sign);
  auto table = equivalence_study(config);
  Json metadata{{"contexts", o.contexts}, {"behaviors", o.behaviors}, {"latents", o.latents},
                {"seed", o.seed},         {"seeds", o.seeds},         {"delta", o.delta},
                {"sign", to_string(config.sign)}};
  out << "argmin posttrain count: " << table.argmin_posttrain_count << "\n";
  write_outputs(o.out, sub, {{"equivalence.csv", equivalence_csv(table, metadata)}}, out);
  return kExitOk;
}

// ---------------------------------------------------------------- check

int cmd_check(const Options& o, const CLI::App& sub, std::ostream& out) {
  auto report = identity_sweeps(o.cases, o.seed);
  const bool ok = report.passed(o.tolerance);
  Json doc{{"cases", report.cases},
           {"tolerance", o.tolerance},
           {"chain_rule", report.chain_rule},
           {"order_invariance", report.order_invariance},
           {"change_of_prior", report.change_of_prior},
           {"decomposition", report.decomposition},
           {"indeterminate", report.indeterminate},
           {"passed", ok}};
  out << "chain rule max residual: " << format_number(report.chain_rule) << "\n"
      << "order invariance max residual: " << format_number(report.order_invariance) << "\n"
      << "change of prior max residual: " << format_number(report.change_of_prior) << "\n"
      << "decomposition max residual: " << format_number(report.decomposition) << "\n"
      << (ok ? "all identities hold\n" : "identity check FAILED\n");
  write_outputs(o.out, sub, {{"check.json", doc.dump(2) + "\n"}}, out);
  return ok ? kExitOk : kExitCheckFailed;
}

void add_out(CLI::App* sub, Options& o) {
  sub->add_option("--out", o.out, "Output directory")->envname("COHERENCE_OUT")->capture_default_str();
}

void add_sign(CLI::App* sub, Options& o) {
  sub->add_option("--sign", o.sign, "Sign convention of the log(1/delta) term")
      ->check(CLI::IsMember({"corrected", "paper"}))
      ->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Coherence optimization toolkit for finite latent-mixture systems", "coherence"};
  app.require_subcommand(1);

  auto* coh = app.add_subcommand("coherence", "Print coherence, mutual predictability and PMI of a policy");
  coh->add_option("--scenario", o.scenario, "Scenario file")->required();
  coh->add_option("--policy", o.policy, "Behavior names, one per context, separated by ','")->required();
  coh->add_option("--prior", o.prior, "Behavior names observed before the policy");
  coh->add_option("--format", o.format)->check(CLI::IsMember({"tabular", "json"}))->capture_default_str();

  auto* en = app.add_subcommand("enumerate", "Write the exact softmax-over-coherence table");
  en->add_option("--scenario", o.scenario, "Scenario file")->required();
  en->add_option("--beta", o.beta, "Inverse temperature, or 'inf'")->capture_default_str();
  en->add_option("--cap", o.cap, "Enumeration cap")->capture_default_str();
  en->add_option("--format", o.format)->check(CLI::IsMember({"tabular", "json"}))->capture_default_str();
  en->add_flag("--all-rows", o.all_rows, "Include zero-mass policies");
  add_out(en, o);

  auto* run = app.add_subcommand("run", "Run a sampler or a semi-supervised pipeline");
  run->add_option("--scenario", o.scenario, "Scenario file");
  run->add_option("--method", o.method, "gibbs, tf-gibbs, debate, bootstrap, icm, srm-exhaustive, erm")
      ->check(CLI::IsMember({"gibbs", "tf-gibbs", "debate", "bootstrap", "icm", "srm-exhaustive", "erm"}))
      ->capture_default_str();
  run->add_option("--beta", o.beta, "Inverse temperature, or 'inf'")->capture_default_str();
  run->add_option("--steps", o.steps, "Sampler rounds")->capture_default_str();
  run->add_option("--seed", o.seed)->capture_default_str();
  run->add_option("--gamma", o.gamma, "Retained fraction (tf-gibbs)")->capture_default_str();
  run->add_option("--anchor", o.anchor, "Anchor mixture weight (tf-gibbs)")->capture_default_str();
  run->add_option("--burn-in", o.burn_in)->capture_default_str();
  run->add_option("--thin", o.thin)->capture_default_str();
  run->add_option("--estimator", o.estimator)
      ->check(CLI::IsMember({"uniform-round", "burnin-thinned"}))
      ->capture_default_str();
  run->add_option("--initial", o.initial, "Initial policy (default: one bootstrap draw)");
  run->add_option("--order", o.order, "Context order for bootstrap, names separated by ','");
  run->add_option("--samples", o.samples, "Bootstrap draws")->capture_default_str();
  run->add_option("--restarts", o.restarts, "ICM restarts")->capture_default_str();
  run->add_option("--max-iters", o.max_iters, "ICM iterations per restart")->capture_default_str();
  run->add_option("--cap", o.cap, "Enumeration cap")->capture_default_str();
  run->add_flag("--f-mp", o.f_mp, "Add mutual predictability to the trajectory");
  run->add_flag("--semi-supervised", o.semi_supervised, "Fix supervised labels and optimize the rest");
  run->add_option("--seeds", o.seeds, "Number of seeds (semi-supervised)")->capture_default_str();
  run->add_option("--contexts", o.contexts, "Generated scenario size")->capture_default_str();
  run->add_option("--behaviors", o.behaviors)->capture_default_str();
  run->add_option("--latents", o.latents)->capture_default_str();
  run->add_option("--supervised", o.supervised, "Supervised context count")->capture_default_str();
  run->add_option("--latent-conc", o.latent_conc)->capture_default_str();
  run->add_option("--emission-conc", o.emission_conc)->capture_default_str();
  run->add_option("--mismatch", o.mismatch)->capture_default_str();
  run->add_option("--selection", o.selection)->check(CLI::IsMember({"best", "final"}))->capture_default_str();
  run->add_option("--delta", o.delta)->capture_default_str();
  add_sign(run, o);
  run->add_flag("--timing", o.timing, "Add a runtime column");
  run->add_option("--jobs", o.jobs, "Concurrent seeds")->capture_default_str();
  add_out(run, o);

  auto* bounds = app.add_subcommand("bounds", "Evaluate a generalization or accuracy bound");
  bounds->add_option("--kind", o.kind)
      ->check(CLI::IsMember({"uniform-convergence", "accuracy-lower-bound", "regularization", "posttrain-count"}))
      ->capture_default_str();
  bounds->add_option("--chi", o.chi, "Coherence in bits");
  bounds->add_option("--gap", o.gap, "Optimality gap");
  bounds->add_option("--n", o.n, "Training samples")->capture_default_str();
  bounds->add_option("--delta", o.delta)->capture_default_str();
  bounds->add_option("--expected-accuracy", o.expected_accuracy);
  bounds->add_option("--entropy", o.entropy);
  bounds->add_option("--kl", o.kl);
  bounds->add_option("--mean-pretrain", o.mean_pretrain, "Mean per-context pretrain coherence");
  bounds->add_option("--mean-posttrain", o.mean_posttrain, "Mean per-context posttrain coherence");
  bounds->add_option("--pretrain-error", o.pretrain_error);
  bounds->add_option("--pretrain-count", o.pretrain_count)->capture_default_str();
  add_sign(bounds, o);
  add_out(bounds, o);

  auto* mc = app.add_subcommand("mc", "Monte Carlo check of the uniform-convergence bound");
  mc->add_option("--trials", o.trials)->capture_default_str();
  mc->add_option("--contexts", o.contexts)->default_str("4");
  mc->add_option("--behaviors", o.behaviors)->capture_default_str();
  mc->add_option("--latents", o.latents)->capture_default_str();
  mc->add_option("--n", o.n, "Training samples")->capture_default_str();
  mc->add_option("--delta", o.delta)->capture_default_str();
  mc->add_option("--seed", o.seed)->capture_default_str();
  add_out(mc, o);

  auto* equiv = app.add_subcommand("equiv", "Coherence-only versus SRM across posttrain counts");
  equiv->add_option("--contexts", o.contexts)->default_str("6");
  equiv->add_option("--behaviors", o.behaviors)->capture_default_str();
  equiv->add_option("--latents", o.latents)->capture_default_str();
  equiv->add_option("--lattice", o.lattice, "Posttrain counts, ',' separated (default 0..contexts)");
  equiv->add_option("--seeds", o.seeds)->default_str("5");
  equiv->add_option("--seed", o.seed)->capture_default_str();
  equiv->add_option("--latent-conc", o.latent_conc)->capture_default_str();
  equiv->add_option("--emission-conc", o.emission_conc)->capture_default_str();
  equiv->add_option("--mismatch", o.mismatch)->capture_default_str();
  equiv->add_option("--delta", o.delta)->capture_default_str();
  add_sign(equiv, o);
  add_out(equiv, o);

  auto* check = app.add_subcommand("check", "Run the identity sweeps");
  check->add_option("--cases", o.cases)->capture_default_str();
  check->add_option("--seed", o.seed)->capture_default_str();
  check->add_option("--tolerance", o.tolerance)->capture_default_str();
  add_out(check, o);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  // Subcommand-specific defaults for options shared with `run`.
  if (mc->parsed() && mc->count("--contexts") == 0) o.contexts = 4;
  if (equiv->parsed() && equiv->count("--contexts") == 0) o.contexts = 6;
  if (equiv->parsed() && equiv->count("--seeds") == 0) o.seeds = 5;

  try {
    if (coh->parsed()) return cmd_coherence(o, out);
    if (en->parsed()) return cmd_enumerate(o, *en, out);
    if (run->parsed()) return o.semi_supervised ? cmd_run_semi(o, *run, out) : cmd_run_single(o, *run, out);
    if (bounds->parsed()) return cmd_bounds(o, *bounds, out);
    if (mc->parsed()) return cmd_mc(o, *mc, out);
    if (equiv->parsed()) return cmd_equiv(o, *equiv, out);
    if (check->parsed()) return cmd_check(o, *check, out);
  } catch (const CapExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kExitCapExceeded;
  } catch (const DegenerateConditioning& e) {
    err << "error: " << e.what() << "\n";
    return kExitDegenerate;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace coherence::cli
