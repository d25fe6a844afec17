#include <cmath>

#include <gtest/gtest.h>

#include "latwalk/error.hpp"
#include "latwalk/green.hpp"
#include "latwalk/monte_carlo.hpp"

using namespace latwalk;

namespace {

McConfig config(std::uint64_t seed, std::uint64_t n, unsigned workers = 1) {
  McConfig cfg;
  cfg.seed = seed;
  cfg.n_samples = n;
  cfg.workers = workers;
  cfg.chunk = 1024;
  return cfg;
}

Functional step_count() {
  return [](const Outcome& o) { return static_cast<double>(o.step); };
}

}  // namespace

TEST(StoppingRule, EntranceAtTimeZero) {
  const auto model = presets::srw();
  const Region origin = Region::points(std::vector<Point>{{0, 0}});
  StoppingRule zero;
  zero.enter("T0", origin, true).exit("tau", Region::disk(5));
  const auto o = simulate_until(model, {0, 0}, zero, 1);
  EXPECT_EQ(o.trigger, 0);
  EXPECT_EQ(o.step, 0u);

  StoppingRule positive;
  positive.enter("T", origin).exit("tau", Region::disk(5));
  for (std::uint64_t t = 0; t < 50; ++t) EXPECT_GT(simulate_until(model, {0, 0}, positive, 1, t).step, 0u);
}

TEST(StoppingRule, ExitUnitDiskAfterOneStep) {
  StoppingRule rule;
  rule.exit("tau", Region::disk(1));
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto o = simulate_until(presets::range2(), {0, 0}, rule, 3, t);
    EXPECT_EQ(o.step, 1u);
  }
}

TEST(StoppingRule, FirstListedTriggerWinsTies) {
  StoppingRule rule;
  rule.exit("tau", Region::disk(16)).enter("T0", Region::full(), true);
  const auto e = estimate_event(presets::srw(), {0, 0}, EventSpec::fired(rule, "tau"), config(4, 2000));
  EXPECT_EQ(e.mean, 0.0);
  StoppingRule flipped;
  flipped.enter("T0", Region::full(), true).exit("tau", Region::disk(0.5));
  const auto f = estimate_event(presets::srw(), {0, 0}, EventSpec::fired(flipped, "T0"), config(4, 2000));
  EXPECT_EQ(f.mean, 1.0);
}

TEST(StoppingRule, UnknownLabel) {
  StoppingRule rule;
  rule.exit("tau", Region::disk(3));
  EXPECT_THROW(rule.find("T"), Error);
}

TEST(EstimateEvent, CertainEvent) {
  StoppingRule rule;
  rule.exit("tau", Region::disk(5));
  const auto e = estimate_event(presets::srw(), {0, 0}, EventSpec::fired(rule, "tau"), config(1, 5000));
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.successes, 5000u);
  EXPECT_TRUE(e.proportion);
}

TEST(EstimateEvent, MatchesDirichletSolve) {
  const auto model = presets::srw();
  const Region origin = Region::points(std::vector<Point>{{0, 0}});
  const double exact = hit_before_exit(model, Region::disk(16), origin, {4, 0});
  StoppingRule rule;
  rule.exit("tau", Region::disk(16)).enter("T", origin);
  const auto e = estimate_event(model, {4, 0}, EventSpec::fired(rule, "T"), config(11, 100000));
  EXPECT_NEAR(e.mean, exact, 3.0 * e.std_error);
  EXPECT_LE(e.wilson.lo, e.mean);
  EXPECT_GE(e.wilson.hi, e.mean);
}

TEST(EstimateEvent, ManyStartsAgreeWithExact) {
  const auto model = presets::skewed_normalized();
  const Region domain = Region::disk(10);
  const Region target = Region::segment(-3, 4, 1);
  const auto h = hit_probabilities(model, domain, target);
  StoppingRule rule;
  rule.exit("tau", domain).enter("T0", target, true);
  const auto event = EventSpec::fired(rule, "T0");
  int within = 0, total = 0;
  for (int i = 0; i < 20; ++i) {
    const Point z{-8 + (i * 7) % 17, -6 + (i * 5) % 13};
    if (!domain.contains(z, model.basis())) continue;
    const auto e = estimate_event(model, z, event, config(100 + i, 20000));
    ++total;
    within += std::abs(e.mean - h.at(z)) <= 3.0 * e.std_error + 1e-12;
  }
  ASSERT_GE(total, 15);
  EXPECT_GE(within, total - 2);
}

TEST(EstimateEvent, IndependentOfWorkerCount) {
  StoppingRule rule;
  rule.exit("tau", Region::disk(20)).enter("T", Region::kappa_line(LineKind::ZPos, 1));
  const auto event = EventSpec::fired(rule, "tau");
  const auto one = estimate_event(presets::srw(), {0, 0}, event, config(9, 20000, 1));
  for (unsigned w : {2u, 8u}) {
    const auto many = estimate_event(presets::srw(), {0, 0}, event, config(9, 20000, w));
    EXPECT_EQ(many.successes, one.successes);
    EXPECT_EQ(many.mean, one.mean);
    EXPECT_EQ(many.std_error, one.std_error);
  }
}

TEST(EstimateEvent, NonTerminatingRuleNeedsCap) {
  StoppingRule rule;
  rule.enter("T", Region::points(std::vector<Point>{{1000, 0}}));
  auto cfg = config(1, 10);
  cfg.hard_cap = 0;
  EXPECT_THROW(estimate_event(presets::srw(), {0, 0}, EventSpec::fired(rule, "T"), cfg), Error);
  cfg.hard_cap = 50;
  const auto e = estimate_event(presets::srw(), {0, 0}, EventSpec::fired(rule, "T"), cfg);
  EXPECT_EQ(e.cap_hits, 10u);
  EXPECT_EQ(e.mean, 0.0);
}

TEST(SimulateUntil, CapExceeded) {
  StoppingRule rule;
  rule.enter("T", Region::points(std::vector<Point>{{1000, 0}}));
  try {
    simulate_until(presets::srw(), {0, 0}, rule, 1, 0, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CapExceeded);
  }
}

TEST(EstimateExpectation, ConstantFunctional) {
  StoppingRule rule;
  rule.exit("tau", Region::disk(4));
  const auto e = estimate_expectation(presets::srw(), {0, 0}, rule, functional::constant(2.5), config(2, 3000));
  EXPECT_EQ(e.mean, 2.5);
  EXPECT_EQ(e.std_error, 0.0);
}

TEST(EstimateExpectation, ExitTimeBracket) {
  // |S_j|^2 - j is a martingale for the simple walk, so n^2 <= E tau_n < (n + 1)^2.
  const int n = 24;
  StoppingRule rule;
  rule.exit("tau", Region::disk(n));
  const auto e = estimate_expectation(presets::srw(), {0, 0}, rule, step_count(), config(5, 20000));
  EXPECT_GE(e.mean + 3.0 * e.std_error, n * n);
  EXPECT_LE(e.mean - 3.0 * e.std_error, (n + 1) * (n + 1));
}

TEST(EstimateExpectation, SimpleWalkOvershoot) {
  const int n = 64;
  StoppingRule rule;
  rule.exit("tau", Region::disk(n));
  const auto e =
      estimate_expectation(presets::srw(), {0, 0}, rule, functional::modulus(LatticeBasis{}), config(6, 20000));
  EXPECT_GE(e.mean, n);
  EXPECT_LT(e.mean, n + 1);
  const auto l =
      estimate_expectation(presets::srw(), {0, 0}, rule, functional::log_modulus(LatticeBasis{}), config(6, 20000));
  EXPECT_GE(l.mean, std::log(n));
  EXPECT_LT(l.mean, std::log(n + 1.0));
}

TEST(EstimateVisits, MatchesGreenFunction) {
  const auto model = presets::range2();
  const Region domain = Region::disk(8);
  const Region subset = Region::segment(0, 5, 1);
  const double exact = expected_visits(model, domain, subset, {0, 0});
  StoppingRule rule;
  rule.exit("tau", domain);
  const auto e = estimate_visits(model, {0, 0}, rule, subset, config(8, 50000));
  EXPECT_NEAR(e.mean, exact, 3.0 * e.std_error);
}

TEST(DeriveSeed, TagsSeparateStreams) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(2, {2, 3}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(1, {2, 0}));
}
