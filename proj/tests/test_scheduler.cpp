#include <gtest/gtest.h>

#include <functional>
#include <limits>

#include "test_util.hpp"

using namespace sensched;
using testutil::scalar;

namespace {

// Recursive minimum over all sensor choices from step t with predicted covariance pred.
double dp_minimum(const Scenario& sc, int t, const Matrix& pred) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < sc.num_sensors(); ++i) {
    const Matrix p = g_update(sc.sensors[i], t, pred);
    double v = p.trace();
    if (t < sc.horizon()) v += dp_minimum(sc, t + 1, h_update(sc.system, t + 1, p));
    best = std::min(best, v);
  }
  return best;
}

Scenario two_identical_sensors(int horizon) {
  auto base = testutil::small_scenario(2, 1, horizon, 3);
  Scenario sc = base;
  sc.sensors = SensorSet({base.sensors[0], base.sensors[0]});
  return sc;
}

}  // namespace

TEST(Tracking, RecoversGeneratingSchedule) {
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto sc = testutil::small_scenario(3, 4, 10, seed);
    std::uniform_int_distribution<int> pick(0, 3);
    Schedule s;
    for (int t = 0; t <= 10; ++t) s.choices.push_back(pick(rng));
    const auto ref = evaluate_schedule(sc, s);
    const auto r = track_covariance(sc, ref.filtered);
    EXPECT_EQ(r.schedule, s);
    EXPECT_EQ(r.method, "sdp+track");
    for (double res : r.tracking_residuals) EXPECT_LT(res, 1e-12);
  }
}

TEST(Tracking, TieGoesToLowestIndex) {
  const auto sc = two_identical_sensors(4);
  const auto ref = evaluate_schedule(sc, Schedule::constant(4, 1));
  EXPECT_EQ(track_covariance(sc, ref.filtered).schedule, Schedule::constant(4, 0));
  EXPECT_EQ(greedy_schedule(sc).schedule, Schedule::constant(4, 0));
}

TEST(Tracking, ScalarSdpReferenceGivesOptimum) {
  const auto sc = testutil::scalar_scenario(1, {1.0, 3.0});
  const auto sol = solve_relaxation(sc);
  ASSERT_TRUE(sol.usable());
  const auto r = track_covariance(sc, sol.cov);
  EXPECT_EQ(r.schedule, Schedule::constant(1, 0));
  EXPECT_NEAR(r.cost, 1.1, 1e-14);
}

TEST(Tracking, RejectsWrongReferenceLength) {
  const auto sc = testutil::scalar_scenario(2, {1.0});
  EXPECT_THROW(track_covariance(sc, {scalar(1.0)}), ParameterError);
}

TEST(RoundTheta, ArgmaxWithTies) {
  Matrix theta(3, 2);
  theta << 0.9, 0.1, 0.5, 0.5, 0.0, 1.0;
  EXPECT_EQ(round_theta(theta), (Schedule{{0, 0, 1}}));
}

TEST(Greedy, ScalarAndSingleSensor) {
  EXPECT_EQ(greedy_schedule(testutil::scalar_scenario(3, {1.0, 3.0})).schedule, Schedule::constant(3, 0));
  const auto sc = testutil::small_scenario(2, 1, 3, 1);
  const auto r = greedy_schedule(sc);
  EXPECT_EQ(r.schedule, Schedule::constant(3, 0));
  EXPECT_NEAR(r.cost, evaluate_schedule(sc, r.schedule).cost, 1e-12);
}

TEST(Greedy, MinimizesStepTrace) {
  const auto sc = testutil::small_scenario(3, 3, 6, 14);
  const auto r = greedy_schedule(sc);
  Matrix pred = sc.system.prior_cov;
  for (int t = 0; t <= 6; ++t) {
    const double chosen = g_update(sc.sensors[r.schedule[t]], t, pred).trace();
    for (int i = 0; i < 3; ++i) EXPECT_LE(chosen, g_update(sc.sensors[i], t, pred).trace());
    if (t < 6) pred = h_update(sc.system, t + 1, r.trajectory.filtered[t]);
  }
}

TEST(Random, DeterministicAndPrefixMonotone) {
  const auto sc = testutil::small_scenario(3, 4, 12, 6);
  const auto a = random_search(sc, 300, 99, 1);
  const auto b = random_search(sc, 300, 99, 4);
  EXPECT_EQ(a.schedule, b.schedule);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_EQ(a.method, "random-300");
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {1, 5, 20, 100, 300}) {
    const double c = random_search(sc, k, 99, 2).cost;
    EXPECT_LE(c, prev);
    prev = c;
  }
  EXPECT_NEAR(a.cost, evaluate_schedule(sc, a.schedule).cost, 1e-12);
  EXPECT_THROW(random_search(sc, 0, 1, 1), ParameterError);
}

TEST(Random, SingleScheduleSpace) {
  const auto sc = testutil::small_scenario(2, 1, 3, 2);
  EXPECT_EQ(random_search(sc, 1, 5, 1).schedule, Schedule::constant(3, 0));
}

TEST(Exhaustive, ScalarOptimum) {
  const auto sc = testutil::scalar_scenario(1, {1.0, 3.0});
  ExhaustiveOptions opt;
  opt.keep_costs = true;
  const auto ex = exhaustive_search(sc, opt);
  EXPECT_EQ(ex.count, 4u);
  EXPECT_EQ(ex.best.schedule, Schedule::constant(1, 0));
  EXPECT_NEAR(ex.best.cost, 1.1, 1e-15);
  ASSERT_EQ(ex.costs.size(), 4u);
  for (std::uint64_t idx = 0; idx < 4; ++idx)
    EXPECT_EQ(ex.costs[idx], evaluate_schedule(sc, schedule_from_index(idx, 2, 2)).cost);
}

TEST(Exhaustive, MatchesRecursiveOracle) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const int horizon = 1 + static_cast<int>(seed % 4);
    const auto sc = testutil::small_scenario(2 + static_cast<int>(seed % 2), 2, horizon, seed);
    const auto ex = exhaustive_search(sc);
    const double dp = dp_minimum(sc, 0, sc.system.prior_cov);
    EXPECT_NEAR(ex.best.cost, dp, 1e-12 * dp);
  }
}

TEST(Exhaustive, WorkerCountIndependent) {
  const auto sc = testutil::small_scenario(3, 3, 6, 19);
  ExhaustiveOptions one, many;
  one.workers = 1;
  many.workers = 4;
  one.keep_costs = many.keep_costs = true;
  const auto a = exhaustive_search(sc, one);
  const auto b = exhaustive_search(sc, many);
  EXPECT_EQ(a.best.schedule, b.best.schedule);
  EXPECT_EQ(a.costs, b.costs);
  EXPECT_EQ(a.count, 2187u);
}

TEST(Exhaustive, LexicographicTieBreak) {
  const auto sc = two_identical_sensors(3);
  const auto ex = exhaustive_search(sc);
  EXPECT_EQ(ex.best.schedule, Schedule::constant(3, 0));
}

TEST(Exhaustive, SingleSensorAndBudget) {
  const auto sc = testutil::small_scenario(2, 1, 5, 1);
  EXPECT_EQ(exhaustive_search(sc).count, 1u);
  const auto big = testutil::small_scenario(2, 4, 30, 1);
  try {
    exhaustive_search(big);
    FAIL() << "expected refusal";
  } catch (const BudgetError& e) {
    EXPECT_EQ(e.required(), std::uint64_t{1} << 62);
  }
  ExhaustiveOptions tight;
  tight.budget = 15;
  EXPECT_THROW(exhaustive_search(testutil::small_scenario(2, 2, 3, 1), tight), BudgetError);
}

TEST(Period, Examples) {
  EXPECT_EQ(detect_period(Schedule{{0, 1, 0, 1, 0, 1}}, 0), 2);
  EXPECT_EQ(detect_period(Schedule::constant(7, 2), 0), 1);
  EXPECT_EQ(detect_period(Schedule{{2, 0, 1, 0, 1, 0, 1}}, 1), 2);
  EXPECT_EQ(detect_period(Schedule{{0, 1, 2, 3}}, 0), std::nullopt);
  EXPECT_THROW(detect_period(Schedule{{0, 1}}, 2), ParameterError);
}
TEST(Period, DefaultSkipIsHalfHorizon) { EXPECT_EQ(detect_period(Schedule{{3, 3, 3, 0, 1, 0, 1, 0, 1}}), 2); }
