#include <doctest.h>

#include <cmath>

#include "coherence/analysis.hpp"
#include "coherence/errors.hpp"
#include "coherence/experiments.hpp"
#include "oracle.hpp"

using namespace coherence;

namespace {

const double kLog2E = 1.4426950408889634;

PolicyDistribution point(std::size_t index, std::size_t size = 9) {
  PolicyDistribution d{{3, 3}, std::vector<double>(size, 0.0), Provenance::Custom};
  d.masses[index] = 1.0;
  return d;
}

PolicyDistribution uniform9() { return {{3, 3}, std::vector<double>(9, 1.0 / 9), Provenance::Custom}; }

RunRecord record_of(std::vector<DPolicy> trajectory) {
  RunRecord r;
  r.method = "test";
  r.trajectory = std::move(trajectory);
  return r;
}

}  // namespace

TEST_CASE("total variation distance") {
  CHECK(tv_distance(uniform9(), uniform9()) == 0.0);
  CHECK(tv_distance(point(0), point(4)) == 1.0);
  auto x1 = softmax_over_coherence(sauces_system(), 1.0);
  double expected = 0.0;
  for (double t : oracle::sauces_table(0.0)) expected += 0.5 * std::abs(t - 1.0 / 9);
  CHECK(std::abs(tv_distance(x1, uniform9()) - expected) <= 1e-12);
  CHECK_THROWS_AS(tv_distance(x1, PolicyDistribution{{9}, std::vector<double>(9, 1.0 / 9), Provenance::Custom}),
                  ValidationError);

  // Metric axioms on random distributions.
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    PolicyDistribution p{{3, 3}, oracle::dirichlet(rng, 9, 0.5), Provenance::Custom};
    PolicyDistribution q{{3, 3}, oracle::dirichlet(rng, 9, 0.5), Provenance::Custom};
    PolicyDistribution r{{3, 3}, oracle::dirichlet(rng, 9, 0.5), Provenance::Custom};
    const double pq = tv_distance(p, q);
    CHECK(pq >= 0.0);
    CHECK(pq <= 1.0);
    CHECK(pq == doctest::Approx(tv_distance(q, p)).epsilon(1e-15));
    CHECK(pq <= tv_distance(p, r) + tv_distance(r, q) + 1e-15);
  }
}

TEST_CASE("empirical distribution estimators") {
  const std::vector<std::size_t> shape{3, 3};
  auto constant = record_of(std::vector<DPolicy>(10, DPolicy{{1, 2}}));
  auto d = empirical_distribution(constant, shape);
  CHECK(d.masses == point(5).masses);
  CHECK(d.provenance == Provenance::Empirical);

  auto two = record_of({DPolicy{{0, 0}}, DPolicy{{2, 2}}, DPolicy{{0, 0}}, DPolicy{{2, 2}}});
  auto half = empirical_distribution(two, shape);
  CHECK(half.masses[0] == 0.5);
  CHECK(half.masses[8] == 0.5);

  two.config.burn_in = 1;
  two.config.thin = 2;
  auto thinned = empirical_distribution(two, shape, Estimator::BurnInThinned);
  CHECK(thinned.masses[8] == 1.0);
  CHECK(parse_estimator(to_string(Estimator::BurnInThinned)) == Estimator::BurnInThinned);
  CHECK_THROWS_AS(empirical_distribution(record_of({}), shape), ValidationError);
}

TEST_CASE("agreement") {
  const std::vector<std::size_t> all{0, 1};
  const DPolicy pi1{{0, 0}}, pi2{{1, 1}};
  CHECK(agreement(pi1, pi1, all).fraction == 1.0);
  CHECK(agreement(pi1, pi2, all).fraction == 0.0);
  CHECK(agreement(pi1, DPolicy{{0, 1}}, all).fraction == 0.5);
  CHECK(agreement(pi1, pi2, all).subset_size == 2);
  CHECK_THROWS_AS(agreement(pi1, pi2, std::vector<std::size_t>{}), ValidationError);
  CHECK_THROWS_AS(agreement(pi1, pi2, std::vector<std::size_t>{2}), ValidationError);
}

TEST_CASE("uniform convergence bound") {
  auto degenerate = uniform_convergence_bound(0.0, 50, 1.0);
  CHECK(std::abs(degenerate.value - std::sqrt(kLog2E / 100)) <= 1e-15);
  CHECK(degenerate.sign == "corrected");

  const double chi = std::log2(0.3);
  auto r = uniform_convergence_bound(chi, 100, 0.05);
  CHECK(std::abs(r.value - std::sqrt((2 * 1.7369655941662063 + kLog2E + std::log2(20.0)) / 200)) <= 1e-12);
  CHECK(r.valid);
  auto paper = uniform_convergence_bound(chi, 100, 0.05, SignConvention::Paper);
  CHECK(std::abs(paper.value - std::sqrt((2 * 1.7369655941662063 + kLog2E - std::log2(20.0)) / 200)) <= 1e-12);
  CHECK(paper.sign == "paper");
  CHECK(paper.value < r.value);

  auto negative = uniform_convergence_bound(0.0, 100, 0.05, SignConvention::Paper);
  CHECK_FALSE(negative.valid);
  CHECK(std::isnan(negative.value));

  CHECK_THROWS_AS(uniform_convergence_bound(chi, 100, 0.0), ValidationError);
  CHECK_THROWS_AS(uniform_convergence_bound(chi, 100, 1.5), ValidationError);
  CHECK_THROWS_AS(uniform_convergence_bound(chi, 0, 0.5), ValidationError);
  CHECK_THROWS_AS(uniform_convergence_bound(0.5, 10, 0.5), ValidationError);
  CHECK(parse_sign("paper") == SignConvention::Paper);
  CHECK_THROWS_AS(parse_sign("minus"), ValidationError);
}

TEST_CASE("optimality gap") {
  ContextPartition one({"s"}, {{"a", "b"}});
  MixtureBayesSystem certain(one, {1.0}, {{1.0, 0.0}});
  CHECK(std::abs(optimality_gap(certain, PolicyState(2), DPolicy{{0}}) - kLog2E) <= 1e-15);
  CHECK(optimality_gap(certain, PolicyState(2), DPolicy{{1}}) == kInfinity);

  auto s = sauces_system();
  CHECK(std::abs(optimality_gap(s, PolicyState(6), DPolicy{{0, 0}}) - 4.9166262292213760) <= 1e-7);

  // Conditioning on π* itself raises every step probability.
  auto positive = sauces_system(0.01);
  const DPolicy star{{0, 0}};
  const auto informed = PolicyState::of(positive.partition(), star);
  CHECK(optimality_gap(positive, informed, star) < optimality_gap(positive, PolicyState(6), star));
}

TEST_CASE("accuracy lower bound") {
  auto exact = accuracy_lower_bound(std::log2(20.0), 10, 0.05, SignConvention::Paper);
  CHECK(std::abs(exact.value - 1.0) <= 1e-15);
  CHECK(accuracy_lower_bound(0.0, 10, 1.0).value == 1.0);

  auto r = accuracy_lower_bound(4.9166263, 1000, 0.05);
  CHECK(std::abs(r.value - (1 - std::sqrt((9.8332526 + 8.6438562) / 1000))) <= 1e-7);
  CHECK(r.valid);
  CHECK(accuracy_lower_bound(4.9166263, 10000000000000000, 0.05).value > 1 - 1e-7);

  auto vacuous = accuracy_lower_bound(20.0, 10, 0.05);
  CHECK_FALSE(vacuous.valid);
  CHECK(vacuous.value < 0.0);
  CHECK_FALSE(accuracy_lower_bound(0.0, 10, 0.05, SignConvention::Paper).valid);
}

TEST_CASE("structural risk minimization") {
  auto s = sauces_system();
  const PolicyState zero(6);
  const std::vector<Observation> none;
  CHECK(srm_select(s, zero, {DPolicy{{2, 1}}}, none, 0.5).policy == DPolicy{{2, 1}});

  const std::vector<Observation> one{{0, 0}};
  auto picked = srm_select(s, zero, {}, one, 0.5);
  CHECK(picked.policy == DPolicy{{0, 0}});
  CHECK(picked.train_accuracy == 1.0);
  // Oracle: enumerate all nine objective values.
  const auto table = oracle::sauces_table(0.0);
  const auto policies = oracle::all_policies({3, 3});
  double best = -kInfinity;
  std::size_t best_index = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    const double chi = table[i] > 0 ? std::log2(table[i]) : -kInfinity;
    const double reg = std::sqrt(std::max(0.0, (-2 * chi + kLog2E + 1.0) / 2.0));
    const double obj = (policies[i][0] == 0 ? 1.0 : 0.0) - reg;
    if (obj > best) {
      best = obj;
      best_index = i;
    }
  }
  CHECK(picked.candidate_index == best_index);
  CHECK(std::abs(picked.objective - best) <= 1e-12);

  // No samples: coherence argmax, the β = ∞ softmax mode.
  auto mode = srm_select(s, zero, {}, none, 0.5);
  CHECK(softmax_over_coherence(s, kInfinity).mass(mode.policy) == 1.0);

  // Equal objectives go to the earlier candidate.
  CHECK(srm_select(s, zero, {DPolicy{{1, 1}}, DPolicy{{2, 2}}}, none, 0.5).candidate_index == 0);
  CHECK_THROWS_AS(srm_select(s, zero, {}, std::vector<Observation>{{0, 3}}, 0.5), ValidationError);
}

TEST_CASE("entropy and divergence") {
  CHECK(std::abs(distribution_entropy(uniform9()) - std::log2(9.0)) <= 1e-12);
  CHECK(distribution_entropy(point(3)) == 0.0);

  auto x1 = softmax_over_coherence(sauces_system(), 1.0);
  CHECK(distribution_kl(x1, x1).bits == 0.0);
  double expected = 0.0;
  for (double q : oracle::sauces_table(0.0))
    if (q > 0) expected += q * std::log2(9 * q);
  auto kl = distribution_kl(x1, uniform9());
  CHECK(std::abs(kl.bits - expected) <= 1e-12);
  CHECK_FALSE(kl.support_violation);

  auto bad = distribution_kl(uniform9(), x1);
  CHECK(bad.support_violation);
  CHECK(bad.bits == kInfinity);
}

TEST_CASE("regularization bound") {
  const double l = std::log2(1e6);
  CHECK(std::abs(regularization_bound_rhs(0.7, 2.0, 2.0, 100, 1e-6).value - (0.7 - std::sqrt(2 * l / 100))) <= 1e-12);

  auto r = regularization_bound_rhs(0.9, 3.17, 0.5, 10000, 1e-6);
  CHECK(std::abs(r.value - (0.9 - std::sqrt(2 * l / 1e4) + std::sqrt(2 / (1e4 * l)) * (3.17 - 0.5))) <= 1e-12);

  double previous = kInfinity;
  for (double kl : {0.0, 0.1, 0.5, 1.0, 4.0}) {
    const double v = regularization_bound_rhs(0.8, 3.0, kl, 500, 0.1).value;
    CHECK(v < previous);
    previous = v;
  }
  CHECK_THROWS_AS(regularization_bound_rhs(0.8, 3.0, 1.0, 500, 1.0), ValidationError);
}

TEST_CASE("conjectured post-training count") {
  CHECK(std::abs(conjectured_posttrain_count(-1.0, -1.0, 0.0, 100).value - 25.0) <= 1e-12);

  const double e1 = 0.1, e2 = 0.2;
  const double ratio = conjectured_posttrain_count(-2.0, -1.5, e2, 200).value /
                       conjectured_posttrain_count(-2.0, -1.5, e1, 200).value;
  CHECK(std::abs(ratio - std::pow((1 - e1) / (1 - e2), 2)) <= 1e-12);

  auto worked = conjectured_posttrain_count(-2.0, -1.5, 0.2, 200);
  CHECK(std::abs(worked.value - 0.25 * (4 / 1.5) * (1 / 0.64) * 200) <= 1e-12);
  CHECK(worked.note.find("conjectur") != std::string::npos);

  CHECK_THROWS_AS(conjectured_posttrain_count(-2.0, -1.5, 1.0, 200), ValidationError);
  CHECK_THROWS_AS(conjectured_posttrain_count(-2.0, 0.0, 0.2, 200), ValidationError);
}

TEST_CASE("ternary search over sample counts") {
  auto r = ternary_search_sample_count([](long x) { return -double((x - 7) * (x - 7)); }, 0, 20);
  CHECK(r.argmax == 7);
  CHECK(r.bracket_lo <= 7);
  CHECK(r.bracket_hi >= 7);

  auto plateau = ternary_search_sample_count([](long x) { return x < 5 ? double(x) : (x <= 12 ? 5.0 : 17.0 - x); },
                                             0, 30);
  CHECK(plateau.argmax == 5);

  for (long peak = 0; peak <= 40; ++peak)
    CHECK(ternary_search_sample_count([peak](long x) { return -std::abs(double(x - peak)); }, 0, 40).argmax == peak);

  CHECK_THROWS_AS(ternary_search_sample_count([](long) { return std::nan(""); }, 0, 10), ValidationError);
  CHECK_THROWS_AS(ternary_search_sample_count([](long x) { return double(x); }, 3, 3), ValidationError);
}
