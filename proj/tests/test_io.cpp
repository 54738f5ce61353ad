#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"

using namespace sensched;

namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "sensched_test_io";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void expect_same(const Scenario& a, const Scenario& b) {
  EXPECT_EQ(a.horizon(), b.horizon());
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.system.dynamics.items(), b.system.dynamics.items());
  EXPECT_EQ(a.system.process_noise, b.system.process_noise);
  EXPECT_EQ(a.system.prior_cov, b.system.prior_cov);
  EXPECT_EQ(a.system.prior_mean, b.system.prior_mean);
  ASSERT_EQ(a.num_sensors(), b.num_sensors());
  for (int i = 0; i < a.num_sensors(); ++i) {
    EXPECT_EQ(a.sensors[i].observation.items(), b.sensors[i].observation.items());
    EXPECT_EQ(a.sensors[i].noise_cov, b.sensors[i].noise_cov);
  }
}

}  // namespace

TEST(ScenarioFile, RoundTripIsExact) {
  for (std::uint64_t seed : {1ull, 2ull, 18446744073709551615ull}) {
    const auto sc = testutil::small_scenario(5, 3, 7, seed);
    const std::string path = temp_path("rt.json");
    save_scenario(sc, path);
    expect_same(sc, load_scenario(path));
  }
  auto hand = testutil::scalar_scenario(2, {1.0, 3.0});
  hand.system.dynamics = MatrixSequence(std::vector<Matrix>{testutil::scalar(0.3), testutil::scalar(1.0 / 3.0)});
  expect_same(hand, scenario_from_json(scenario_to_json(hand)));
}

TEST(ScenarioFile, SchemaErrorsNameTheField) {
  const Json good = scenario_to_json(testutil::small_scenario(2, 2, 3, 1));
  Json j = good;
  j.erase("T");
  try {
    scenario_from_json(j);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("T"), std::string::npos);
  }
  j = good;
  j["sensors"][1].erase("V");
  try {
    scenario_from_json(j);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("sensors[1]"), std::string::npos);
  }
  j = good;
  j["W"] = "identity";
  EXPECT_THROW(scenario_from_json(j), SchemaError);
  j = good;
  j["version"] = 99;
  EXPECT_THROW(scenario_from_json(j), SchemaError);
  EXPECT_THROW(detail::parse_json("{not json", "x"), SchemaError);
}

TEST(ScenarioFile, ValidationErrors) {
  const Json good = scenario_to_json(testutil::small_scenario(2, 2, 3, 1));
  Json j = good;
  j["W"] = Json::array({Json::array({1.0, 0.0}), Json::array({0.0, -1.0})});
  EXPECT_THROW(scenario_from_json(j), ValidationError);
  j = good;
  j["N"] = 3;
  EXPECT_THROW(scenario_from_json(j), ValidationError);
  j = good;
  j["n"] = 4;
  EXPECT_THROW(scenario_from_json(j), ValidationError);
}

TEST(RelaxedFile, RoundTrip) {
  const auto sc = testutil::small_scenario(2, 2, 3, 5);
  const auto sol = solve_relaxation(sc);
  const std::string path = temp_path("relaxed.json");
  save_relaxed(sol, path);
  const auto back = load_relaxed(path);
  EXPECT_EQ(back.theta, sol.theta);
  EXPECT_EQ(back.cov, sol.cov);
  EXPECT_EQ(back.pred_info, sol.pred_info);
  EXPECT_EQ(back.objective, sol.objective);
  EXPECT_EQ(back.stats.status, sol.stats.status);
}

TEST(ScheduleFile, OneBasedOnDisk) {
  const Schedule s{{0, 2, 1}};
  EXPECT_EQ(schedule_to_json(s).dump(), "[1,3,2]");
  EXPECT_EQ(schedule_from_json(Json::parse("[1,3,2]")), s);
  EXPECT_EQ(schedule_from_json(Json::parse(R"({"schedule":[1,3,2]})")), s);
  EXPECT_THROW(schedule_from_json(Json::parse("[1.5]")), SchemaError);
}

TEST(CostStream, LittleEndianRoundTrip) {
  const std::vector<double> costs{1.0, -2.5, 1e-300, 3.141592653589793};
  const std::string bytes = encode_costs_le(costs);
  ASSERT_EQ(bytes.size(), 32u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[7]), 0x3f);  // 1.0 = 0x3ff0000000000000
  EXPECT_EQ(static_cast<unsigned char>(bytes[6]), 0xf0);
  EXPECT_EQ(decode_costs_le(bytes), costs);
  EXPECT_THROW(decode_costs_le("abc"), SchemaError);
}

TEST(Text, TrajectoryCsvAndBoundReport) {
  const auto sc = testutil::scalar_scenario(1, {1.0, 3.0});
  const std::string csv = trajectory_csv(evaluate_schedule(sc, Schedule{{0, 0}}));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,tr_filtered,tr_predicted");
  EXPECT_NE(csv.find("\n1,0.6"), std::string::npos);
  BoundReport r;
  r.lambda = 0.25;
  r.beta = {1.0, 2.0};
  r.eta = {1.0, 2.0};
  r.lambda_t = {0.0, 0.25};
  const std::string text = bound_report_text(r);
  EXPECT_NE(text.find("lambda=0.25\n"), std::string::npos);
  EXPECT_NE(text.find("beta_csv=1,2\n"), std::string::npos);
  EXPECT_NE(text.find("eta_csv="), std::string::npos);
  EXPECT_NE(text.find("epsilon="), std::string::npos);
}
