#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dpanther/frames.hpp"
#include "dpanther/sim.hpp"

namespace dpanther {
namespace {

// Straight line to the observed goal.
Planner straight_planner() {
  return {"straight", [](const Observation& obs) {
            ActionTuple a;
            for (int k = 0; k < 4; ++k) a.qhat[k] = obs.g * (k + 1) / 4.0;
            a.total_time = std::clamp(obs.g.norm() / 1.5 + 1.0, 0.5, 6.0);
            return PlannerOutput{{a}, {}};
          }};
}

TEST(ObstacleKind, NamesRoundTrip) {
  for (auto k : {ObstacleKind::kStatic, ObstacleKind::kTrefoil, ObstacleKind::kSquare,
                 ObstacleKind::kEight, ObstacleKind::kEpitrochoid}) {
    EXPECT_EQ(parse_obstacle_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_obstacle_kind("helix"), std::invalid_argument);
}

TEST(ObstaclePosition, PeriodicAndScaled) {
  for (auto kind : {ObstacleKind::kTrefoil, ObstacleKind::kSquare, ObstacleKind::kEight,
                    ObstacleKind::kEpitrochoid}) {
    ObstacleSpec s;
    s.kind = kind;
    s.offset = Vec3(5, 1, 2);
    s.scale = Vec3(1.5, 2.0, 0.5);
    s.phase = 0.3;
    s.period = 7.0;
    for (double t : {0.0, 1.1, 4.9}) {
      EXPECT_LT((obstacle_position(s, t) - obstacle_position(s, t + 7.0)).norm(), 1e-9);
      const Vec3 unit = (obstacle_position(s, t) - s.offset).cwiseQuotient(s.scale);
      EXPECT_LE(unit.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
    }
  }
  ObstacleSpec fixed;
  fixed.offset = Vec3(1, 2, 3);
  EXPECT_EQ(obstacle_position(fixed, 12.3), fixed.offset);
}

TEST(ObstaclePosition, SquareCornersAndSpeed) {
  ObstacleSpec s;
  s.kind = ObstacleKind::kSquare;
  s.period = 8.0;  // one unit of perimeter per second
  EXPECT_LT((obstacle_position(s, 0.0) - Vec3(1, -1, 0)).norm(), 1e-12);
  EXPECT_LT((obstacle_position(s, 2.0) - Vec3(1, 1, 0)).norm(), 1e-12);
  EXPECT_LT((obstacle_position(s, 5.0) - Vec3(-1, 0, 0)).norm(), 1e-12);
}

TEST(ObstacleSpline, TracksTheCurve) {
  ObstacleSpec s;
  s.kind = ObstacleKind::kTrefoil;
  s.offset = Vec3(5, 0, 1);
  s.scale = Vec3(1.5, 1.5, 1.0);
  const Spline fit = obstacle_spline(s, 2.0, 6.0);
  EXPECT_EQ(fit.space(), SplineSpace::obstacle());
  double worst = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double t = 2.0 + 6.0 * k / 100.0;
    worst = std::max(worst, (fit.eval3(t) - obstacle_position(s, t)).norm());
  }
  EXPECT_LT(worst, 0.05);
}

TEST(ProjectGoal, InsideAndOutside) {
  const Vec3 d(1, 1, 1);
  EXPECT_EQ(project_goal(Vec3(2, 1, 1), d, 4.0), Vec3(2, 1, 1));
  const Vec3 p = project_goal(Vec3(11, 1, 1), d, 4.0);
  EXPECT_LT((p - Vec3(5, 1, 1)).norm(), 1e-12);
  EXPECT_THROW(project_goal(d, d, 0.0), std::invalid_argument);
}

TEST(Commitment, HoverSpliceAndRest) {
  Commitment c = Commitment::hover(Vec3(0, 0, 1), 0.5, 0.0);
  EXPECT_EQ(c.state(3.0).p, Vec3(0, 0, 1));
  EXPECT_NEAR(c.state(3.0).psi, 0.5, 1e-12);
  EXPECT_EQ(c.state(3.0).v, Vec3::Zero());

  ActionTuple a;
  for (int k = 0; k < 4; ++k) a.qhat[k] = Vec3(0, 0, 1) + Vec3(k + 1, 0, 0);
  a.total_time = 2.0;
  const Spline pos = impose_boundary_conditions(a, Vec3(0, 0, 1), Vec3::Zero(), Vec3::Zero(), 1.0);
  c.splice(1.0, pos, constant_psi(0.0, 1.0, 2.0));
  EXPECT_EQ(c.state(0.5).p, Vec3(0, 0, 1));
  EXPECT_GT(c.state(2.0).v.x(), 0.0);
  EXPECT_LT((c.state(10.0).p - Vec3(4, 0, 1)).norm(), 1e-12);
  EXPECT_EQ(c.state(10.0).v, Vec3::Zero());
  EXPECT_THROW(c.splice(0.5, pos, constant_psi(0.0, 1.0, 2.0)), std::invalid_argument);
  c.prune(1.5);
  EXPECT_LT((c.state(1.5).p - pos.eval3(1.5)).norm(), 1e-12);
}

TEST(SelectObstacle, PicksTheOneOnThePath) {
  MissionConfig cfg;
  const Commitment hover = Commitment::hover(Vec3(0, 0, 1), 0.0, 0.0);
  std::vector<ObstacleSpec> obstacles(3);
  obstacles[0].offset = Vec3(5, 5, 1);
  obstacles[1].offset = Vec3(0.5, 0, 1.2);
  obstacles[2].offset = Vec3(-3, 0, 1);
  EXPECT_EQ(select_obstacle(obstacles, hover, 0.0, cfg), 1);
  // A larger obstacle at the same distance is closer in the normalized metric.
  obstacles[2].offset = Vec3(0, 0.5, 1.2);
  obstacles[2].s_obst = Vec3::Constant(2.0);
  EXPECT_EQ(select_obstacle(obstacles, hover, 0.0, cfg), 2);
}

TEST(Observation, FlattenRoundTrip) {
  Observation o;
  o.v = Vec3(1, 2, 3);
  o.psi_dot = -0.4;
  for (int k = 0; k < 10; ++k) o.obst_cps[k] = Vec3(k, 2 * k, -k);
  const auto x = o.flatten();
  EXPECT_EQ(x(9), -0.4);
  EXPECT_EQ(x(10 + 3 * 4 + 1), 8.0);
  EXPECT_EQ(Observation::unflatten(x).flatten(), x);
}

TEST(Observation, InvariantUnderWorldYawRotationAndTranslation) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  MissionConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    UAVState d;
    d.p = Vec3(u(rng), u(rng), u(rng));
    d.v = Vec3(u(rng), u(rng), u(rng));
    d.a = Vec3(u(rng), u(rng), u(rng));
    d.psi = u(rng);
    d.psi_dot = u(rng);
    Eigen::MatrixXd cps(3, 10);
    for (int k = 0; k < 10; ++k) cps.col(k) = Vec3(u(rng), u(rng), u(rng)) * 2.0;
    const Spline obst(SplineSpace::obstacle(), 0.0, 6.0, cps);
    const Vec3 goal = Vec3(u(rng), u(rng), u(rng)) * 4.0;
    const Observation o = build_observation(d, obst, Vec3::Constant(0.8), goal, cfg);

    const double th = u(rng);
    const Vec3 shift(u(rng), u(rng), u(rng));
    const Eigen::Matrix3d R = rot_z(th);
    UAVState d2 = d;
    d2.p = R * d.p + shift;
    d2.v = R * d.v;
    d2.a = R * d.a;
    d2.psi = d.psi + th;
    const Eigen::MatrixXd cps2 = (R * cps).colwise() + shift;
    const Observation o2 = build_observation(d2, obst.with_control_points(cps2), Vec3::Constant(0.8),
                                             R * goal + shift, cfg);
    EXPECT_LT((o.flatten() - o2.flatten()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ReplanStep, CollidingCandidateFallsBack) {
  MissionConfig cfg;
  Commitment c = Commitment::hover(cfg.start, 0.0, 0.0);
  std::vector<ObstacleSpec> world(1);
  world[0].offset = cfg.start + Vec3(2.0, 0, 0);
  const ReplanRecord r = replan_step(straight_planner(), c, 0.0, Vec3(10, 0, 1), world, cfg);
  EXPECT_EQ(r.n_candidates, 1);
  EXPECT_EQ(r.n_collision_free, 0);
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.chosen, -1);
  EXPECT_EQ(c.state(5.0).p, cfg.start);
}

TEST(ReplanStep, FreeCandidateIsCommittedFromTd) {
  MissionConfig cfg;
  Commitment c = Commitment::hover(cfg.start, 0.0, 0.0);
  std::vector<ObstacleSpec> world(1);
  world[0].offset = cfg.start + Vec3(2.0, 5.0, 0);
  const ReplanRecord r = replan_step(straight_planner(), c, 0.0, Vec3(10, 0, 1), world, cfg);
  EXPECT_EQ(r.n_collision_free, 1);
  EXPECT_EQ(r.chosen, 0);
  EXPECT_FALSE(r.fallback);
  EXPECT_NEAR(r.t_d, cfg.replan_period, 1e-15);
  EXPECT_EQ(c.state(r.t_d - 1e-3).p, cfg.start);
  EXPECT_GT(c.state(r.t_d + 1.0).p.x(), cfg.start.x());
  EXPECT_TRUE(std::isfinite(r.augmented_costs[0]));
}

TEST(ReplanStep, EmptyPlannerFallsBack) {
  MissionConfig cfg;
  Commitment c = Commitment::hover(cfg.start, 0.0, 0.0);
  const Planner empty{"empty", [](const Observation&) { return PlannerOutput{}; }};
  const ReplanRecord r = replan_step(empty, c, 0.0, Vec3(10, 0, 1), {}, cfg);
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.n_candidates, 0);
}

TEST(RunMission, ReachesGoalsInAnEmptyWorld) {
  MissionConfig cfg;
  cfg.goals = {Vec3(6, 0, 1), cfg.start};
  const MissionLog log = run_mission(straight_planner(), {}, cfg, 30.0);
  EXPECT_GE(log.goals_reached, 2);
  EXPECT_TRUE(std::isinf(log.safety_ratio));
  EXPECT_EQ(log.path.size(), log.path_psi.size());
  EXPECT_NEAR(log.path.back().t, 30.0, 1e-9);
  // Replans happen every replan period.
  EXPECT_NEAR(log.replans[1].time - log.replans[0].time, cfg.replan_period, 1e-12);
}

TEST(RunMission, StopsAfterGoalAndCallbackCanAbort) {
  MissionConfig cfg;
  cfg.goals = {Vec3(4, 0, 1)};
  cfg.stop_after_goals = 1;
  const MissionLog log = run_mission(straight_planner(), {}, cfg, 30.0);
  EXPECT_EQ(log.goals_reached, 1);
  EXPECT_LT(log.path.back().t, 30.0);
  int calls = 0;
  const MissionLog aborted = run_mission(straight_planner(), {}, MissionConfig{}, 30.0,
                                         [&](const ReplanRecord&) { return ++calls < 3; });
  EXPECT_EQ(aborted.replans.size(), 3u);
}

TEST(RandomEpisode, DeterministicAndTrefoil) {
  const MissionConfig base;
  const Episode a = random_trefoil_episode(base, 5);
  const Episode b = random_trefoil_episode(base, 5);
  EXPECT_EQ(a.obstacle.offset, b.obstacle.offset);
  EXPECT_EQ(a.mission.goals, b.mission.goals);
  EXPECT_EQ(a.obstacle.kind, ObstacleKind::kTrefoil);
  EXPECT_NE(random_trefoil_episode(base, 6).obstacle.offset, a.obstacle.offset);
}

}  // namespace
}  // namespace dpanther
