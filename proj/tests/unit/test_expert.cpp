#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "dpanther/expert.hpp"
#include "dpanther/experiments.hpp"

namespace dpanther {
namespace {

class ExpertFixture : public ::testing::Test {
 protected:
  ExperimentConfig cfg;
  PlanEvaluator evaluator{cfg.weights, cfg.limits, cfg.mission.yaw_samples};
  Observation obs = static_observation(Vec3(7, 0, 1), cfg);
};

TEST(ExpertConfig, Validation) {
  ExpertConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n_runs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = ExpertConfig{};
  c.t_min = 7.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(YawInvariantRho, CoversEveryYaw) {
  const Vec3 rho(0.3, 0.5, 0.55);
  const Vec3 inv = yaw_invariant_rho(rho);
  EXPECT_DOUBLE_EQ(inv.z(), 0.55);
  for (int k = 0; k < 360; ++k) {
    const double a = k * M_PI / 180.0;
    // Corners of the rotated footprint stay inside the invariant box.
    for (double sx : {-1.0, 1.0}) {
      for (double sy : {-1.0, 1.0}) {
        const double x = std::cos(a) * sx * rho.x() - std::sin(a) * sy * rho.y();
        const double y = std::sin(a) * sx * rho.x() + std::cos(a) * sy * rho.y();
        EXPECT_LE(std::abs(x), inv.x() + 1e-12);
        EXPECT_LE(std::abs(y), inv.y() + 1e-12);
      }
    }
  }
}

TEST(ControlPointRms, Basic) {
  ActionTuple a, b;
  for (int k = 0; k < 4; ++k) b.qhat[k] = Vec3(0, 0, 2);
  EXPECT_DOUBLE_EQ(control_point_rms(a, a), 0.0);
  EXPECT_DOUBLE_EQ(control_point_rms(a, b), 2.0);
  b.total_time = 5.0;  // time is not part of the distance
  EXPECT_DOUBLE_EQ(control_point_rms(a, b), 2.0);
}

TEST_F(ExpertFixture, InitialGuessesStartStraight) {
  const auto seeds = initial_guesses(obs, cfg.expert.n_runs, cfg.expert);
  ASSERT_EQ(static_cast<int>(seeds.size()), cfg.expert.n_runs);
  for (int k = 0; k < 4; ++k) {
    EXPECT_LT((seeds[0].qhat[k] - obs.g * (k + 1) / 4.0).norm(), 1e-12);
  }
  for (const auto& s : seeds) {
    EXPECT_GE(s.total_time, cfg.expert.t_min);
    EXPECT_LE(s.total_time, cfg.expert.t_pred);
    EXPECT_LT((s.qhat[3] - obs.g).norm(), 1e-12);
  }
  EXPECT_THROW(initial_guesses(obs, 0, cfg.expert), std::invalid_argument);
}

TEST_F(ExpertFixture, SingleRunTraceIsMonotone) {
  const auto seeds = initial_guesses(obs, 3, cfg.expert);
  const SingleRunResult r = optimize_single(seeds[2], obs, cfg.expert, evaluator);
  ASSERT_GE(r.trace.size(), 2u);
  for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
  EXPECT_LE(r.penalized_cost, r.trace.front());
  EXPECT_GE(r.action.total_time, cfg.expert.t_min);
  EXPECT_LE(r.action.total_time, cfg.expert.t_pred);
}

TEST_F(ExpertFixture, PlanReturnsDistinctSortedCollisionFreeModes) {
  const auto sols = expert_plan(obs, cfg.expert, evaluator);
  ASSERT_GE(sols.size(), 2u);
  ASSERT_LE(static_cast<int>(sols.size()), cfg.expert.n_s);
  const Spline obst = obs.obstacle_spline(cfg.expert.t_pred);
  bool left = false, right = false;
  for (std::size_t i = 0; i < sols.size(); ++i) {
    if (i > 0) EXPECT_LE(sols[i - 1].cost, sols[i].cost);
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_GE(control_point_rms(sols[i].action, sols[j].action), cfg.expert.dedupe_threshold);
    }
    const Spline pos = impose_boundary_conditions(sols[i].action, Vec3::Zero(), obs.v, obs.a);
    EXPECT_TRUE(collision_free(pos, obst, expert_boxes(obs, cfg.expert)));
    const double y = sols[i].action.qhat[1].y();
    left = left || y > 0.3;
    right = right || y < -0.3;
  }
  EXPECT_TRUE(left && right);

  // Deterministic: the same query yields the same answer bit for bit.
  const auto again = expert_plan(obs, cfg.expert, evaluator);
  ASSERT_EQ(again.size(), sols.size());
  for (std::size_t i = 0; i < sols.size(); ++i) {
    EXPECT_EQ(again[i].action.flatten(), sols[i].action.flatten());
  }
}

TEST_F(ExpertFixture, ClearPathNeedsNoDetour) {
  ExperimentConfig far = cfg;
  Observation o = obs;
  for (auto& q : o.obst_cps) q += Vec3(0, 30, 0);
  const auto sols = expert_plan(o, far.expert, evaluator);
  ASSERT_EQ(sols.size(), 1u);
  for (int k = 0; k < 4; ++k) EXPECT_LT(std::abs(sols[0].action.qhat[k].y()), 0.1);
}

TEST_F(ExpertFixture, FreeFallStartDoesNotThrow) {
  Observation o = obs;
  o.a = Vec3(0, 0, -kGravity);
  std::vector<ExpertSolution> sols;
  EXPECT_NO_THROW(sols = expert_plan(o, cfg.expert, evaluator));
  for (const auto& s : sols) EXPECT_TRUE(std::isfinite(s.cost));
}

}  // namespace
}  // namespace dpanther
