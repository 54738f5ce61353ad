#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

using namespace sensched;
using testutil::scalar;

TEST(Assembly, VariableMetadataPartition) {
  const auto sc = testutil::small_scenario(3, 2, 4, 5);
  const Relaxation rel = build_relaxation(sc);
  EXPECT_NO_THROW(rel.program.validate());
  EXPECT_EQ(rel.program.num_vars, relaxation_variable_count(3, 2, 4));
  for (int t = 0; t <= 4; ++t) {
    ASSERT_NE(rel.program.find_variable("P", t), nullptr);
    ASSERT_NE(rel.program.find_variable("Q", t), nullptr);
    ASSERT_NE(rel.program.find_variable("theta", t), nullptr);
    EXPECT_EQ(rel.program.find_variable("Qpred", t) != nullptr, t > 0);
  }
  EXPECT_EQ(rel.program.find_variable("P", 5), nullptr);
}

TEST(Assembly, ProtocolScaleVariableCount) {
  const int d = 55;
  EXPECT_EQ(relaxation_variable_count(10, 4, 100), 101 * (2 * d + 4) + 100 * d);
  const auto sc = testutil::small_scenario(10, 4, 100, 1);
  EXPECT_EQ(build_relaxation(sc).program.num_vars, relaxation_variable_count(10, 4, 100));
}

TEST(Assembly, DumpFormatHeader) {
  const auto sc = testutil::scalar_scenario(1, {1.0, 3.0});
  std::ostringstream os;
  dump_program(build_relaxation(sc).program, os);
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("conic-program 1\n", 0), 0u);
  EXPECT_NE(text.find("\nvar P 0 "), std::string::npos);
  EXPECT_NE(text.find("\ncone psd "), std::string::npos);
}

TEST(Assembly, RejectsSingularPrior) {
  auto sc = testutil::scalar_scenario(1, {1.0});
  sc.system.prior_cov = scalar(0.0);
  EXPECT_THROW(build_relaxation(sc), ValidationError);
}

TEST(Solve, SingleStepSingleSensorIsTight) {
  const auto sc = testutil::scalar_scenario(0, {1.0});
  const Relaxation rel = build_relaxation(sc);
  EXPECT_EQ(rel.program.num_vars, 3);
  const auto sol = solve_relaxation(rel);
  ASSERT_TRUE(sol.usable());
  EXPECT_NEAR(sol.theta(0, 0), 1.0, 1e-6);
  EXPECT_NEAR(sol.cov[0](0, 0), 0.5, 1e-5);
}

TEST(Solve, ScalarDominantSensor) {
  const auto sc = testutil::scalar_scenario(1, {1.0, 3.0});
  const auto sol = solve_relaxation(sc);
  ASSERT_TRUE(sol.usable()) << sol.stats.message;
  EXPECT_GE(sol.theta(0, 0), 0.99);
  EXPECT_GE(sol.theta(1, 0), 0.99);
  EXPECT_NEAR(sol.objective, 1.1, 1e-4 * 1.1);
}

TEST(Solve, OneSensorMatchesItsSchedule) {
  const auto sc = testutil::small_scenario(3, 1, 6, 8);
  const auto sol = solve_relaxation(sc);
  ASSERT_TRUE(sol.usable());
  const double cost = evaluate_schedule(sc, Schedule::constant(6, 0)).cost;
  EXPECT_NEAR(sol.objective, cost, 1e-4 * cost);
}

TEST(Solve, IdenticalSensorsMatchSingleSensorCost) {
  std::mt19937_64 rng(3);
  auto base = testutil::small_scenario(3, 1, 5, 12);
  const Sensor s = base.sensors[0];
  Scenario sc = base;
  sc.sensors = SensorSet({s, s});
  const auto sol = solve_relaxation(sc);
  ASSERT_TRUE(sol.usable());
  const double cost = evaluate_schedule(base, Schedule::constant(5, 0)).cost;
  EXPECT_NEAR(sol.objective, cost, 1e-4 * cost);
}

TEST(Solve, InvariantsAndLowerBound) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto sc = testutil::small_scenario(3, 3, 12, seed);
    const auto sol = solve_relaxation(sc);
    ASSERT_TRUE(sol.usable()) << sol.stats.message;
    const auto res = relaxation_residuals(sc, sol);
    EXPECT_LE(res.simplex, 1e-6);
    EXPECT_LE(res.theta_negativity, 1e-6);
    EXPECT_LE(res.info_update, 1e-6);
    EXPECT_LE(res.cov_lmi, 1e-6);
    EXPECT_LE(res.pred_lmi, 1e-6);
    const double best_random = random_search(sc, 2000, seed, 1).cost;
    EXPECT_LE(sol.objective, best_random + 1e-4 * std::abs(sol.objective));
    const double theta_cost = evaluate_theta(sc, sol.theta).cost;
    EXPECT_GE(theta_cost, sol.objective - 1e-4 * std::abs(sol.objective));
    for (int t = 0; t <= 12; ++t)
      EXPECT_LT((sol.pred_cov[t] * sol.pred_info[t] - Matrix::Identity(3, 3)).norm(), 1e-6);
  }
}

TEST(Tighten, FixedPointOnExactTuple) {
  const auto sc = testutil::small_scenario(3, 3, 8, 21);
  Matrix theta = Matrix::Constant(9, 3, 1.0 / 3.0);
  const auto traj = evaluate_theta(sc, theta);
  CovInfoTuple exact;
  for (int t = 0; t <= 8; ++t) {
    exact.cov.push_back(traj.filtered[t]);
    exact.info.push_back(spd_inverse(traj.filtered[t], "P"));
    exact.pred_info.push_back(spd_inverse(traj.predicted[t], "Ppred"));
  }
  const auto out = tighten(sc, exact);
  for (int t = 0; t <= 8; ++t) {
    EXPECT_LT((out.cov[t] - exact.cov[t]).norm(), 1e-8 * std::max(1.0, exact.cov[t].norm()));
    EXPECT_LT((out.pred_info[t] - exact.pred_info[t]).norm(), 1e-8 * std::max(1.0, exact.pred_info[t].norm()));
  }
}

TEST(Tighten, RemovesInflatedSlack) {
  const auto sc = testutil::small_scenario(2, 2, 5, 4);
  const auto traj = evaluate_theta(sc, Matrix::Constant(6, 2, 0.5));
  CovInfoTuple loose;
  for (int t = 0; t <= 5; ++t) {
    const Matrix q = spd_inverse(traj.filtered[t], "P");
    loose.info.push_back(q);
    loose.pred_info.push_back(spd_inverse(traj.predicted[t], "Ppred"));
    loose.cov.push_back(spd_inverse(q, "Q") + Matrix::Identity(2, 2));
  }
  const auto out = tighten(sc, loose);
  for (int t = 0; t <= 5; ++t) EXPECT_GT(min_eigenvalue(loose.cov[t] - out.cov[t]), 0.5);
}

TEST(Tighten, NeverIncreasesCostOnSolverOutput) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto sc = testutil::small_scenario(4, 3, 10, 100 + seed);
    const auto sol = solve_relaxation(sc);
    ASSERT_TRUE(sol.usable());
    const auto out = tighten(sc, as_tuple(sol));
    double loose_cost = 0.0, tight_cost = 0.0;
    for (int t = 0; t <= 10; ++t) {
      loose_cost += sol.cov[t].trace();
      tight_cost += out.cov[t].trace();
      EXPECT_GE(min_eigenvalue(sol.cov[t] - out.cov[t] + 1e-7 * Matrix::Identity(4, 4)), 0.0);
      EXPECT_GE(min_eigenvalue(out.info[t] - sol.info[t]), -1e-7 * std::max(1.0, sol.info[t].norm()));
      const Matrix incr = sol.info[t] - sol.pred_info[t];
      EXPECT_LT((out.info[t] - out.pred_info[t] - incr).norm(), 1e-6);
      EXPECT_LT((out.cov[t] * out.info[t] - Matrix::Identity(4, 4)).norm(), 1e-6);
    }
    EXPECT_LE(tight_cost, loose_cost + 1e-6);
  }
}

TEST(Tighten, RejectsShortTuple) {
  const auto sc = testutil::scalar_scenario(2, {1.0});
  CovInfoTuple t;
  t.cov = {scalar(1.0)};
  t.info = {scalar(1.0)};
  t.pred_info = {scalar(1.0)};
  EXPECT_THROW(tighten(sc, t), ParameterError);
}

TEST(EvaluateTheta, ScalarHalfHalf) {
  const auto sc = testutil::scalar_scenario(0, {1.0, 3.0});
  Matrix theta(1, 2);
  theta << 0.5, 0.5;
  const auto traj = evaluate_theta(sc, theta);
  EXPECT_NEAR(1.0 / traj.filtered[0](0, 0), 5.0 / 3.0, 1e-14);
  EXPECT_NEAR(traj.cost, 0.6, 1e-14);
}

TEST(EvaluateTheta, OneHotMatchesSchedule) {
  const auto sc = testutil::small_scenario(4, 3, 10, 31);
  for (int i = 0; i < 3; ++i) {
    Matrix theta = Matrix::Zero(11, 3);
    theta.col(i).setOnes();
    const double a = evaluate_theta(sc, theta).cost;
    const double b = evaluate_schedule(sc, Schedule::constant(10, i)).cost;
    EXPECT_NEAR(a, b, 1e-9 * b);
  }
}

TEST(EvaluateTheta, ProjectsLeakageRejectsGarbage) {
  const auto sc = testutil::scalar_scenario(0, {1.0, 3.0});
  Matrix theta(1, 2);
  theta << 1.0 + 5e-7, -5e-7;
  EXPECT_NEAR(evaluate_theta(sc, theta).cost, 0.5, 1e-12);
  theta << 0.7, 0.7;
  EXPECT_THROW(evaluate_theta(sc, theta), ParameterError);
}
