#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace sensched;
using testutil::scalar;

namespace {

Sensor scalar_sensor(double c, double v) { return {MatrixSequence(scalar(c)), scalar(v)}; }

}  // namespace

TEST(GUpdate, ScalarHandValues) {
  const Sensor s = scalar_sensor(1.0, 1.0);
  EXPECT_NEAR(g_update(s, 0, scalar(1.0))(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g_update(s, 0, scalar(1.5))(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(g_update_info(s, 0, scalar(1.0))(0, 0), 0.5, 1e-15);
}

TEST(GUpdate, ZeroObservationIsIdentityMap) {
  std::mt19937_64 rng(5);
  const Matrix m = testutil::random_pd(rng, 3);
  const Sensor s{MatrixSequence(Matrix::Zero(2, 3)), Matrix::Identity(2, 2)};
  EXPECT_LT((g_update(s, 0, m) - m).norm(), 1e-14);
  EXPECT_LT((g_update_info(s, 0, m) - m).norm(), 1e-12);
  EXPECT_LT((jacobian_H(s, 0, m) - Matrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(GUpdate, RejectsIndefiniteInput) {
  const Sensor s = scalar_sensor(1.0, 1.0);
  EXPECT_THROW(g_update(s, 0, scalar(-0.1)), DomainError);
  EXPECT_NO_THROW(g_update(s, 0, scalar(-1e-10)));
  EXPECT_THROW(g_update_info(s, 0, scalar(0.0), true), DomainError);
  EXPECT_NEAR(g_update_info(s, 0, scalar(0.0), false)(0, 0), 0.0, 1e-9);
}

TEST(GUpdate, WoodburyAgreementAndContraction) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 2 + trial % 6;
    const int m = 1 + trial % n;
    const Sensor s = testutil::random_sensor(rng, n, m);
    const Matrix p = testutil::random_pd(rng, n);
    const Matrix a = g_update(s, 0, p);
    const Matrix b = g_update_info(s, 0, p);
    EXPECT_LE((a - b).norm() / a.norm(), 1e-8);
    EXPECT_GE(min_eigenvalue(p - a), -1e-8);
    EXPECT_EQ(a, a.transpose());
  }
}

TEST(HUpdate, HandValues) {
  auto sc = testutil::scalar_scenario(2, {1.0});
  EXPECT_NEAR(h_update(sc.system, 1, scalar(1.0))(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(h_update(sc.system, 1, scalar(0.5))(0, 0), 1.5, 1e-15);
  EXPECT_NEAR(h_update(sc.system, 2, scalar(0.0))(0, 0), 1.0, 1e-15);
  EXPECT_THROW(h_update(sc.system, 0, scalar(1.0)), ParameterError);
  EXPECT_THROW(h_update(sc.system, 3, scalar(1.0)), ParameterError);
}

TEST(HUpdate, UsesPreviousDynamics) {
  auto sc = testutil::scalar_scenario(2, {1.0});
  sc.system.dynamics = MatrixSequence(std::vector<Matrix>{scalar(2.0), scalar(3.0)});
  EXPECT_NEAR(h_update(sc.system, 1, scalar(1.0))(0, 0), 5.0, 1e-15);
  EXPECT_NEAR(h_update(sc.system, 2, scalar(1.0))(0, 0), 10.0, 1e-15);
}

TEST(Evaluate, ScalarTrajectory) {
  const auto sc = testutil::scalar_scenario(1, {1.0, 3.0});
  const auto traj = evaluate_schedule(sc, Schedule{{0, 0}});
  EXPECT_NEAR(traj.filtered[0](0, 0), 0.5, 1e-15);
  EXPECT_NEAR(traj.predicted[0](0, 0), 1.0, 1e-15);
  EXPECT_NEAR(traj.predicted[1](0, 0), 1.5, 1e-15);
  EXPECT_NEAR(traj.filtered[1](0, 0), 0.6, 1e-15);
  EXPECT_NEAR(traj.cost, 1.1, 1e-15);
}

TEST(Evaluate, ScalarSecondSensorByHand) {
  const auto sc = testutil::scalar_scenario(1, {1.0, 3.0});
  const auto traj = evaluate_schedule(sc, Schedule{{1, 1}});
  const double p0 = 1.0 - 1.0 / 4.0;  // 0.75
  const double pred = p0 + 1.0;      // 1.75
  const double p1 = pred - pred * pred / (pred + 3.0);
  EXPECT_NEAR(traj.filtered[0](0, 0), 0.75, 1e-15);
  EXPECT_NEAR(traj.cost, p0 + p1, 1e-14);
}

TEST(Evaluate, SingleStep) {
  const auto sc = testutil::small_scenario(3, 2, 0, 9);
  const auto traj = evaluate_schedule(sc, Schedule{{1}});
  EXPECT_NEAR(traj.cost, g_update(sc.sensors[1], 0, sc.system.prior_cov).trace(), 1e-14);
}

TEST(Evaluate, InvariantsOnGeneratedScenario) {
  const auto sc = testutil::small_scenario(4, 3, 25, 77);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> pick(0, 2);
  Schedule s;
  for (int t = 0; t <= 25; ++t) s.choices.push_back(pick(rng));
  const auto traj = evaluate_schedule(sc, s);
  ASSERT_EQ(traj.filtered.size(), 26u);
  for (int t = 0; t <= 25; ++t) {
    EXPECT_LE((traj.filtered[t] - traj.filtered[t].transpose()).norm(), 1e-9);
    EXPECT_GE(min_eigenvalue(traj.predicted[t] - traj.filtered[t]), -1e-8);
  }
  EXPECT_NEAR(traj.cost, traj.recompute_cost(), 1e-9 * traj.cost);
  const auto raw = evaluate_schedule(sc, s, EvalOptions{false});
  EXPECT_LT(std::abs(raw.cost - traj.cost), 1e-9 * traj.cost);
  const auto info = to_information(traj);
  for (int t = 0; t <= 25; ++t)
    EXPECT_LT((info.filtered[t] * traj.filtered[t] - Matrix::Identity(4, 4)).norm(), 1e-7);
}

TEST(Evaluate, RejectsBadSchedule) {
  const auto sc = testutil::scalar_scenario(1, {1.0, 3.0});
  EXPECT_THROW(evaluate_schedule(sc, Schedule{{0}}), ParameterError);
  EXPECT_THROW(evaluate_schedule(sc, Schedule{{0, 2}}), ParameterError);
}

TEST(Jacobian, ScalarValue) {
  EXPECT_NEAR(jacobian_H(scalar_sensor(1.0, 1.0), 0, scalar(1.0))(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(jacobian_H(scalar_sensor(1.0, 1.0), 0, scalar(1.5))(0, 0), 0.4, 1e-15);
}

TEST(Jacobian, FiniteDifferenceConvergesLinearly) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    const Sensor s = testutil::random_sensor(rng, n, 1 + trial % n);
    const Matrix m = testutil::random_pd(rng, n, 0.05);
    const Matrix l = testutil::random_psd(rng, n, 2);
    const Matrix h = jacobian_H(s, 0, m);
    const Matrix lin = h * l * h.transpose();
    for (double eps : {1e-4, 1e-5, 1e-6}) {
      const Matrix fd = (g_update(s, 0, m + eps * l) - g_update(s, 0, m - eps * l)) / (2 * eps);
      EXPECT_LE((fd - lin).norm(), std::max(10 * eps, 1e-4) * std::max(1.0, lin.norm()));
    }
  }
}

TEST(Jacobian, ConcavityInequality) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 4;
    const Sensor s = testutil::random_sensor(rng, n, 1 + trial % n);
    const Matrix q = testutil::random_pd(rng, n);
    const Matrix m = q + testutil::random_psd(rng, n, 1 + trial % n);
    const Matrix h = jacobian_H(s, 0, q);
    const Matrix lhs = g_update(s, 0, m) - g_update(s, 0, q);
    const Matrix rhs = h * (m - q) * h.transpose();
    EXPECT_GE(min_eigenvalue(rhs - lhs + 1e-8 * Matrix::Identity(n, n)), 0.0);
  }
}
