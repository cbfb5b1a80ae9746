#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "coherence/analysis.hpp"
#include "coherence/errors.hpp"
#include "coherence/experiments.hpp"
#include "oracle.hpp"

using namespace coherence;

namespace {

SamplerConfig config_with(double beta, std::size_t steps, std::uint64_t seed) {
  SamplerConfig c;
  c.beta = beta;
  c.steps = steps;
  c.seed = seed;
  c.record_coherence = false;
  return c;
}

std::vector<double> visit_frequencies(const RunRecord& record, const std::vector<std::size_t>& shape) {
  PolicySpace space(shape);
  std::vector<double> f(space.size(), 0.0);
  for (const auto& p : record.trajectory) f[space.index_of(p)] += 1.0;
  for (auto& x : f) x /= static_cast<double>(record.trajectory.size());
  return f;
}

}  // namespace

TEST_CASE("gibbs is absorbed at the sauces maximizer") {
  auto s = sauces_system(0.0);
  auto run = gibbs_run(s, DPolicy{{0, 0}}, config_with(1.0, 500, 3));
  CHECK(run.trajectory.size() == 501);
  CHECK(run.moves == 0);
  for (const auto& p : run.trajectory) CHECK(p == DPolicy{{0, 0}});
  REQUIRE_FALSE(run.warnings.empty());
  CHECK(run.warnings[0].find("positivity") != std::string::npos);
}

TEST_CASE("gibbs trajectory shape and determinism") {
  auto raw = oracle::random_raw(4, 4, 3, 2);
  auto s = oracle::build(raw);
  auto cfg = config_with(1.0, 300, 42);
  cfg.record_coherence = true;
  auto a = gibbs_run(s, DPolicy{{0, 0, 0, 0}}, cfg);
  auto b = gibbs_run(s, DPolicy{{0, 0, 0, 0}}, cfg);
  CHECK(a.trajectory == b.trajectory);
  CHECK(a.trajectory.size() == 301);
  CHECK(a.coherence.size() == 301);
  CHECK(a.resampled.size() == 301);
  CHECK(a.resampled[0].empty());
  for (std::size_t t = 1; t < a.trajectory.size(); ++t) {
    REQUIRE(a.resampled[t].size() == 1);
    std::size_t changed = 0;
    for (std::size_t c = 0; c < 4; ++c)
      if (a.trajectory[t][c] != a.trajectory[t - 1][c]) {
        ++changed;
        CHECK(c == a.resampled[t][0]);
      }
    CHECK(changed <= 1);
  }
  auto other = gibbs_run(s, DPolicy{{0, 0, 0, 0}}, config_with(1.0, 300, 43));
  CHECK(other.trajectory != a.trajectory);

  CHECK_THROWS_AS(gibbs_run(s, DPolicy{{0, 0, 0}}, cfg), ValidationError);
  auto bad = cfg;
  bad.beta = 0.0;
  CHECK_THROWS_AS(gibbs_run(s, DPolicy{{0, 0, 0, 0}}, bad), ValidationError);
  bad = cfg;
  bad.steps = 0;
  CHECK_THROWS_AS(gibbs_run(s, DPolicy{{0, 0, 0, 0}}, bad), ValidationError);
}

TEST_CASE("gibbs at infinite beta only moves to conditional maximizers") {
  auto raw = oracle::random_raw(8, 3, 3, 3);
  auto s = oracle::build(raw);
  auto run = gibbs_run(s, DPolicy{{1, 2, 0}}, config_with(kInfinity, 200, 1));
  for (std::size_t t = 1; t < run.trajectory.size(); ++t) {
    const std::size_t c = run.resampled[t][0];
    std::vector<std::pair<std::size_t, std::size_t>> rest;
    for (std::size_t d = 0; d < 3; ++d)
      if (d != c) rest.emplace_back(d, run.trajectory[t - 1][d]);
    double best = 0.0;
    for (std::size_t a = 0; a < 3; ++a) best = std::max(best, oracle::conditional(raw, rest, c, a));
    CHECK(oracle::conditional(raw, rest, c, run.trajectory[t][c]) >= best - 1e-12);
  }
}

TEST_CASE("gibbs converges to the softmax over coherence") {
  const std::vector<std::size_t> shape{3, 3, 3};
  auto raw = oracle::random_raw(21, 3, 3, 2);
  auto s = oracle::build(raw);
  const auto target = oracle::joint(raw);
  auto run = gibbs_run(s, DPolicy{{0, 0, 0}}, config_with(1.0, 200000, 7));
  auto cfg = run.config;
  cfg.burn_in = 10000;
  run.config = cfg;
  auto thinned = empirical_distribution(run, shape, Estimator::BurnInThinned);
  CHECK(oracle::tv(thinned.masses, target) <= 0.05);
  CHECK(oracle::tv(visit_frequencies(run, shape), target) <= 0.05);

  // Tempered target.
  auto hot = gibbs_run(s, DPolicy{{0, 0, 0}}, config_with(2.0, 200000, 8));
  CHECK(oracle::tv(visit_frequencies(hot, shape), oracle::tempered_joint(target, 2.0)) <= 0.05);

  // Longer chains get closer on average.
  std::vector<double> ladder;
  for (std::size_t steps : {200, 2000, 20000, 200000}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed)
      total += oracle::tv(visit_frequencies(gibbs_run(s, DPolicy{{0, 0, 0}}, config_with(1.0, steps, seed)), shape),
                          target);
    ladder.push_back(total / 5);
  }
  for (std::size_t i = 1; i < ladder.size(); ++i) CHECK(ladder[i] < ladder[i - 1]);
}

TEST_CASE("gibbs kernel") {
  auto raw = oracle::random_raw(13, 3, 2, 2);
  auto s = oracle::build(raw);
  const auto policies = oracle::all_policies({2, 2, 2});
  for (double beta : {1.0, 2.0}) {
    const auto target = oracle::tempered_joint(oracle::joint(raw), beta);
    for (std::size_t i = 0; i < policies.size(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < policies.size(); ++j) {
        const double k = gibbs_kernel(s, DPolicy{policies[i]}, DPolicy{policies[j]}, beta);
        row += k;
        const double back = gibbs_kernel(s, DPolicy{policies[j]}, DPolicy{policies[i]}, beta);
        CHECK(std::abs(target[i] * k - target[j] * back) <= 1e-12);
      }
      CHECK(std::abs(row - 1.0) <= 1e-12);
    }
  }
  CHECK(gibbs_kernel(s, DPolicy{{0, 0, 0}}, DPolicy{{1, 1, 0}}, 1.0) == 0.0);
  // One-coordinate move: 1/|S| times the leave-one-out conditional.
  CHECK(std::abs(gibbs_kernel(s, DPolicy{{0, 0, 0}}, DPolicy{{0, 1, 0}}, 1.0) -
                 oracle::conditional(raw, {{0, 0}, {2, 0}}, 1, 1) / 3) <= 1e-12);
}

TEST_CASE("training-friendly gibbs") {
  const std::vector<std::size_t> shape{3, 3, 3};
  auto raw = oracle::random_raw(21, 3, 3, 2);
  auto s = oracle::build(raw);

  auto cfg = config_with(1.0, 200000, 9);
  cfg.gamma = 0.85;  // keeps two of three: leave-one-out
  auto run = training_friendly_gibbs_run(s, DPolicy{{0, 0, 0}}, cfg);
  for (std::size_t t = 1; t < 50; ++t) CHECK(run.resampled[t].size() == 1);
  CHECK(oracle::tv(visit_frequencies(run, shape), oracle::joint(raw)) <= 0.1);

  auto small = cfg;
  small.gamma = 0.2;
  CHECK_THROWS_AS(training_friendly_gibbs_run(s, DPolicy{{0, 0, 0}}, small), ValidationError);
  auto bad = cfg;
  bad.anchor_weight = 1.5;
  CHECK_THROWS_AS(training_friendly_gibbs_run(s, DPolicy{{0, 0, 0}}, bad), ValidationError);

  // λ = 1: every redraw comes from σ(φ_0, ·), φ_0 the state kept in round 1.
  auto anchored_cfg = config_with(1.0, 30000, 10);
  anchored_cfg.gamma = 0.85;
  anchored_cfg.anchor_weight = 1.0;
  const DPolicy start{{2, 1, 0}};
  auto anchored = training_friendly_gibbs_run(s, start, anchored_cfg);
  REQUIRE(anchored.resampled[1].size() == 1);
  std::vector<std::pair<std::size_t, std::size_t>> phi0;
  for (std::size_t c = 0; c < 3; ++c)
    if (c != anchored.resampled[1][0]) phi0.emplace_back(c, start[c]);
  std::vector<std::vector<double>> counts(3, std::vector<double>(3, 0.0));
  std::vector<double> totals(3, 0.0);
  for (std::size_t t = 1; t < anchored.trajectory.size(); ++t) {
    const std::size_t c = anchored.resampled[t][0];
    counts[c][anchored.trajectory[t][c]] += 1.0;
    totals[c] += 1.0;
  }
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t a = 0; a < 3; ++a)
      CHECK(std::abs(counts[c][a] / totals[c] - oracle::conditional(raw, phi0, c, a)) <= 0.02);
}

TEST_CASE("debate") {
  auto raw = oracle::random_raw(1, 3, 2, 2);
  CHECK_THROWS_AS(debate_run(oracle::build(raw), config_with(1.0, 10, 0)), ValidationError);

  auto s = sauces_system(0.01);
  const auto table = oracle::sauces_table(0.01);
  std::vector<double> pro(3, 0.0), con(3, 0.0);
  for (std::size_t i = 0; i < 9; ++i) {
    pro[i / 3] += table[i];
    con[i % 3] += table[i];
  }
  auto run = debate_run(s, config_with(1.0, 200000, 4));
  CHECK(run.trajectory.size() == 200001);
  std::vector<double> same(9, 0.0), staggered(9, 0.0);
  for (std::size_t t = 0; t + 1 < run.trajectory.size(); ++t) {
    same[run.trajectory[t][0] * 3 + run.trajectory[t][1]] += 1.0;
    staggered[run.trajectory[t][0] * 3 + run.trajectory[t + 1][1]] += 1.0;
  }
  std::vector<double> product(9);
  for (std::size_t i = 0; i < 9; ++i) product[i] = pro[i / 3] * con[i % 3];
  for (auto& x : same) x /= 200000.0;
  for (auto& x : staggered) x /= 200000.0;
  // Same-round pairs come from two independent alternating chains.
  CHECK(oracle::tv(same, product) <= 0.02);
  CHECK(oracle::tv(staggered, table) <= 0.02);

  // A deterministic pairing never moves from its initial consistent draw.
  ContextPartition two({"pro", "con"}, {{"p0", "p1"}, {"c0", "c1"}});
  auto paired = from_joint_table(two, std::vector<double>{0.0, 0.5, 0.5, 0.0}, 0.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto fixed = debate_run(paired, config_with(1.0, 50, seed));
    CHECK(fixed.moves == 0);
    CHECK(fixed.trajectory[0][0] != fixed.trajectory[0][1]);
  }

  // At β = ∞ mayo is never any conditional maximizer on the exact table.
  auto cold = debate_run(sauces_system(0.0), config_with(kInfinity, 500, 2));
  for (const auto& p : cold.trajectory) CHECK((p[0] != 0 && p[1] != 0));
}

TEST_CASE("simple bootstrap") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto raw = oracle::random_raw(seed + 50, 3, 3, 2);
    auto s = oracle::build(raw);
    CHECK(oracle::tv(simple_bootstrap_distribution(s, {2, 0, 1}, 1.0).masses, oracle::joint(raw)) <= 1e-12);
    CHECK(oracle::tv(simple_bootstrap_distribution(s, {}, 1.0).masses, oracle::joint(raw)) <= 1e-12);
  }
  CHECK_THROWS_AS(simple_bootstrap_distribution(sauces_system(), {0, 0}, 1.0), ValidationError);

  // One context: a tempered draw from the prior predictive.
  ContextPartition one({"s"}, {{"a", "b", "c"}});
  MixtureBayesSystem single(one, {0.4, 0.6}, {{0.2, 0.3, 0.5}, {0.6, 0.3, 0.1}});
  const auto hot = simple_bootstrap_distribution(single, {0}, 3.0);
  const auto expected = tempered_infer(single, PolicyState(3), 0, 3.0);
  for (std::size_t a = 0; a < 3; ++a) CHECK(std::abs(hot.masses[a] - expected[a]) <= 1e-12);

  // Sampled runs match the enumerated distribution.
  auto s = sauces_system(0.01);
  const auto exact = simple_bootstrap_distribution(s, {}, 1.0);
  std::vector<double> freq(9, 0.0);
  const std::size_t runs = 20000;
  for (std::uint64_t seed = 0; seed < runs; ++seed) {
    auto r = simple_bootstrap_run(s, {}, config_with(1.0, 1, seed));
    CHECK_FALSE(r.aborted);
    freq[r.policy[0] * 3 + r.policy[1]] += 1.0 / runs;
  }
  CHECK(oracle::tv(freq, exact.masses) <= 0.03);

  auto fixed = simple_bootstrap_run(s, {1, 0}, config_with(1.0, 1, 3));
  CHECK(fixed.order == std::vector<std::size_t>{1, 0});
  CHECK(fixed.step_probability.size() == 2);
  CHECK(std::abs(fixed.log2_probability -
                 std::log2(fixed.step_probability[0]) - std::log2(fixed.step_probability[1])) <= 1e-12);
  CHECK_THROWS_AS(simple_bootstrap_run(s, {1}, config_with(1.0, 1, 3)), ValidationError);

  // Colder runs put more mass on the most coherent policy.
  const double at1 = simple_bootstrap_distribution(s, {}, 1.0).mass(DPolicy{{0, 0}});
  const double at4 = simple_bootstrap_distribution(s, {}, 4.0).mass(DPolicy{{0, 0}});
  CHECK(at4 < at1);  // mayo is not the marginal maximizer, so cold bootstrap avoids it
}

TEST_CASE("mutual predictability") {
  auto s = sauces_system(0.0);
  CHECK(mutual_predictability(s, DPolicy{{0, 0}}) == 0.0);
  CHECK(std::abs(mutual_predictability(s, DPolicy{{1, 1}}) + 2.0) <= 1e-12);
  CHECK(mutual_predictability(s, DPolicy{{0, 1}}) == -kInfinity);

  auto raw = oracle::random_raw(30, 3, 3, 2);
  auto sys = oracle::build(raw);
  const std::vector<std::size_t> pi{2, 0, 1};
  double expected = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<std::pair<std::size_t, std::size_t>> rest;
    for (std::size_t d = 0; d < 3; ++d)
      if (d != c) rest.emplace_back(d, pi[d]);
    expected += std::log2(oracle::conditional(raw, rest, c, pi[c]));
  }
  CHECK(std::abs(mutual_predictability(sys, DPolicy{pi}) - expected) <= 1e-10);
}

TEST_CASE("icm hill climbing") {
  auto s = sauces_system(0.0);
  auto top = icm_hill_climb(s, DPolicy{{0, 0}}, 50, 1);
  CHECK(top.policy == DPolicy{{0, 0}});
  CHECK(top.mutual_predictability == 0.0);
  CHECK(top.local_maximum);

  // Without restarts (ketchup, ketchup) is a strict local maximum.
  auto stuck = icm_hill_climb(s, DPolicy{{1, 1}}, 50, 1, 1);
  CHECK(stuck.policy == DPolicy{{1, 1}});
  CHECK(stuck.local_maximum);
  CHECK(icm_hill_climb(s, DPolicy{{1, 1}}, 50, 1, 8).policy == DPolicy{{0, 0}});
  CHECK_THROWS_AS(icm_hill_climb(s, DPolicy{{1, 1}}, 0, 1), ValidationError);

  ContextPartition one({"s"}, {{"a", "b", "c"}});
  MixtureBayesSystem single(one, {0.4, 0.6}, {{0.2, 0.3, 0.5}, {0.6, 0.3, 0.1}});
  // Marginal: 0.44, 0.30, 0.26.
  CHECK(icm_hill_climb(single, DPolicy{{2}}, 10, 0).policy == DPolicy{{0}});

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto raw = oracle::random_raw(seed + 200, 4, 3, 2);
    auto sys = oracle::build(raw);
    auto r = icm_hill_climb(sys, DPolicy{{0, 0, 0, 0}}, 100, seed);
    REQUIRE(r.local_maximum);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t a = 0; a < 3; ++a) {
        DPolicy q = r.policy;
        q[c] = a;
        CHECK(mutual_predictability(sys, q) <= r.mutual_predictability + 1e-12);
      }
  }
}

TEST_CASE("gibbs on the exact sauces table never leaves mayo once reached") {
  auto s = sauces_system(0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto run = gibbs_run(s, DPolicy{{0, 1}}, config_with(1.0, 200, seed));
    bool absorbed = false;
    for (const auto& p : run.trajectory) {
      if (absorbed) CHECK(p == DPolicy{{0, 0}});
      absorbed = absorbed || p == DPolicy{{0, 0}};
      if (!absorbed) CHECK(p != DPolicy{{0, 2}});
    }
  }
}

TEST_CASE("gibbs at infinite beta resamples fries to mayo after burger mayo") {
  auto s = sauces_system(0.01);
  std::size_t seen = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto run = gibbs_run(s, DPolicy{{0, 1}}, config_with(kInfinity, 1, seed));
    if (run.resampled[1][0] != 1) continue;
    ++seen;
    CHECK(run.trajectory[1] == DPolicy{{0, 0}});
  }
  CHECK(seen > 0);
}

TEST_CASE("simple bootstrap error is first order in beta minus one") {
  auto raw = oracle::random_raw(77, 3, 3, 2);
  auto s = oracle::build(raw);
  const auto joint = oracle::joint(raw);
  auto gap = [&](double beta) {
    return oracle::tv(simple_bootstrap_distribution(s, {0, 1, 2}, beta).masses, oracle::tempered_joint(joint, beta));
  };
  CHECK(gap(1.0) <= 1e-12);
  const double c = std::max(gap(0.9), gap(1.1)) / 0.1;
  CHECK(c > 0.0);
  CHECK(gap(0.8) <= 3 * c * 0.2);
  CHECK(gap(1.2) <= 3 * c * 0.2);
  CHECK(std::max(gap(0.9), gap(1.1)) <= std::min(gap(0.8), gap(1.2)));
}
