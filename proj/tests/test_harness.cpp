#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "itoanova/harness.hpp"

using namespace itoanova;
using nlohmann::json;

namespace {

json minimal_plan() {
  return {{"name", "tiny"},
          {"model", {{"model", "ConstantRho"}}},
          {"n", {256}},
          {"alpha", {0.0, 0.5}},
          {"replications", 3},
          {"seed_base", 5},
          {"fine_factor", 8},
          {"statistics", {"errors", "coverage", "gof"}},
          {"gof_alpha", {0.5}},
          {"gof_bootstrap", 9}};
}

std::string plan_error(const json& j) {
  try {
    validate_plan(plan_from_json(j));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PlanError);
    return e.what();
  }
  ADD_FAILURE() << "plan accepted: " << j.dump();
  return {};
}

}  // namespace

TEST(Plan, RoundTrip) {
  const auto p = plan_from_json(minimal_plan());
  EXPECT_EQ(plan_to_json(plan_from_json(plan_to_json(p))), plan_to_json(p));
}

TEST(Plan, ErrorsCarryJsonPointer) {
  auto j = minimal_plan();
  j["replications"] = "many";
  EXPECT_NE(plan_error(j).find("/replications"), std::string::npos);
  j = minimal_plan();
  j["n"] = {256, -4};
  EXPECT_NE(plan_error(j).find("/n/1"), std::string::npos);
  j = minimal_plan();
  j["colour"] = "blue";
  EXPECT_NE(plan_error(j).find("/colour"), std::string::npos);
  j = minimal_plan();
  j.erase("model");
  EXPECT_NE(plan_error(j).find("/model"), std::string::npos);
  j = minimal_plan();
  j["gof_alpha"] = {0.25};
  EXPECT_NE(plan_error(j).find("/gof_alpha"), std::string::npos);
}

TEST(Rates, ExactPowerLaw) {
  std::vector<double> n{256, 1024, 4096, 16384}, e;
  for (double v : n) e.push_back(3.0 * std::pow(v, -0.5));
  EXPECT_NEAR(rate_regression(n, e).slope, -0.5, 1e-12);
  n.pop_back();
  e.pop_back();
  try {
    rate_regression(n, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::InsufficientCells);
  }
}

TEST(MixedNormal, NeedsReplications) {
  std::vector<double> e(10, 0.1), t(10, 1.0);
  try {
    mixed_normal_check(e, t);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::InsufficientReplications);
  }
}

TEST(RunPlan, DeterministicAcrossThreadCounts) {
  auto plan = plan_from_json(minimal_plan());
  plan.persist_replications = true;
  const auto a = summary_csvs(run_plan(plan, {1}), plan);
  const auto b = summary_csvs(run_plan(plan, {3}), plan);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a.contains("replications.csv"));
}

TEST(RunPlan, SmokeFinishesQuickly) {
  auto plan = plan_from_json(minimal_plan());
  plan.replications = 2;
  plan.checks = {{"none_failed", "failures", json::object()}};
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = run_plan(plan);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 10.0);
  ASSERT_EQ(s.checks.size(), 1u);
  EXPECT_TRUE(s.checks[0].pass);
  EXPECT_EQ(s.cell({256, 1.0, 0.5}).gof_replications, 2);
  EXPECT_EQ(s.cell({256, 1.0, 0.0}).gof_replications, 0);
}
