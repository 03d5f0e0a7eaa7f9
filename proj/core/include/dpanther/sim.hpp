#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <optional>
#include <string_view>
#include <vector>

#include "dpanther/costs.hpp"
#include "dpanther/expert.hpp"
#include "dpanther/frames.hpp"
#include "dpanther/observation.hpp"
#include "dpanther/splines.hpp"
#include "dpanther/student.hpp"
#include "dpanther/yaw.hpp"

namespace dpanther {

enum class ObstacleKind { kStatic, kTrefoil, kSquare, kEight, kEpitrochoid };

std::string_view to_string(ObstacleKind kind);
ObstacleKind parse_obstacle_kind(std::string_view name);

/// A moving box obstacle whose centre follows a closed curve.
struct ObstacleSpec {
  ObstacleKind kind = ObstacleKind::kStatic;
  Vec3 offset = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  double phase = 0.0;    // radians of the curve parameter
  double period = 10.0;  // seconds per loop
  Vec3 s_obst = Vec3::Constant(0.8);

  void validate() const;
};

/// Centre of the obstacle at time t (world frame).
Vec3 obstacle_position(const ObstacleSpec& spec, double t);

inline constexpr int kObstacleFitSamples = 50;

/// Least-squares S^3_{3,13} fit of the obstacle centre over [t0, t0 + horizon].
Spline obstacle_spline(const ObstacleSpec& spec, double t0, double horizon,
                       int samples = kObstacleFitSamples);

/// g_term projected onto the ball of radius r around d.
Vec3 project_goal(const Vec3& g_term, const Vec3& d, double r);

/// Time-indexed pieces of planned trajectories (world frame); the latest piece
/// that has started is the active one. The UAV rests at the end of a piece.
class Commitment {
 public:
  static Commitment hover(const Vec3& p, double psi, double t);

  UAVState state(double t) const;
  /// Position spline of the active piece at time t.
  const Spline& position_at(double t) const;
  void splice(double t_start, Spline pos, PsiTrajectory psi);
  /// Drops pieces that ended before t.
  void prune(double t);

 private:
  struct Piece {
    double t_start;
    Spline pos;
    PsiTrajectory psi;
  };
  const Piece& active(double t) const;
  std::vector<Piece> pieces_;
};

struct MissionConfig {
  Vec3 start = Vec3(0.0, 0.0, 1.0);
  std::vector<Vec3> goals{Vec3(10.0, 0.0, 1.0)};  // visited cyclically
  double sphere_radius = 4.0;
  double replan_period = 0.4;
  double tick = 0.05;
  double goal_tolerance = 0.5;
  CostWeights weights;
  DynamicLimits limits;
  ExpertConfig expert;  // t_pred, t_min, s_uav are shared with the mission
  int yaw_samples = kDefaultYawSamples;
  int stop_after_goals = 0;  // end the mission once this many goals are reached (0: never)

  void validate() const;
};

/// Index of the obstacle closest to the committed trajectory over
/// [t0, t0 + t_pred] in the normalized distance max_j |kappa_j| / rho_j
/// (below 1 exactly when the boxes overlap). Ties go to the lowest index.
int select_obstacle(std::span<const ObstacleSpec> obstacles, const Commitment& committed, double t0,
                    const MissionConfig& cfg);

/// Observation at the future point `d` of the committed trajectory, given the
/// predicted obstacle path in world coordinates.
Observation build_observation(const UAVState& d, const Spline& obstacle_world, const Vec3& s_obst,
                              const Vec3& g_term, const MissionConfig& cfg);
/// Same, predicting the obstacle over [t_d, t_d + t_pred].
Observation build_observation(const UAVState& d, double t_d, const ObstacleSpec& obstacle,
                              const Vec3& g_term, const MissionConfig& cfg);

/// Candidate actions from a planner together with the planner's own cost
/// estimates (empty for the student).
struct PlannerOutput {
  std::vector<ActionTuple> actions;
  std::vector<double> costs;
};

struct Planner {
  std::string name;
  std::function<PlannerOutput(const Observation&)> plan;
};

Planner expert_planner(const ExpertConfig& cfg, std::shared_ptr<const PlanEvaluator> evaluator);
Planner student_planner(std::shared_ptr<const Policy> policy);

struct ReplanRecord {
  double time = 0.0;    // when the replan was triggered
  double t_d = 0.0;     // start of the new trajectory
  Observation observation;
  int obstacle_index = 0;
  PlannerOutput planner;
  int n_candidates = 0;
  int n_collision_free = 0;
  std::vector<bool> collision_free;
  std::vector<double> augmented_costs;  // world-frame augmented cost per candidate
  int chosen = -1;                      // -1 on fallback
  bool fallback = false;
  double planner_latency_s = 0.0;
};

/// One replan: observe at d, plan, certify every candidate against all
/// obstacles, commit the cheapest survivor from t_d on, or keep the old plan.
ReplanRecord replan_step(const Planner& planner, Commitment& commitment, double t_now,
                         const Vec3& g_term, std::span<const ObstacleSpec> obstacles,
                         const MissionConfig& cfg);

struct MissionLog {
  std::vector<ReplanRecord> replans;
  std::vector<TimedPoint> path;
  std::vector<double> path_psi;
  int goals_reached = 0;
  std::vector<double> goal_times;
  double safety_ratio = 0.0;
  double separating_axis_ratio = 0.0;
};

/// Kinematic playback with a replan every replan_period. `on_replan` may stop
/// the mission early by returning false.
MissionLog run_mission(const Planner& planner, std::span<const ObstacleSpec> obstacles,
                       const MissionConfig& cfg, double duration,
                       const std::function<bool(const ReplanRecord&)>& on_replan = {});

/// Randomized trefoil episode used to collect imitation data.
struct DaggerConfig {
  int iterations = 3;
  int target_pairs = 3000;   // stop labeling once this many pairs are stored
  double episode_duration = 12.0;
  TrainConfig train;
  MissionConfig mission;
};

/// Trefoil scene with randomized position, phase, scale and terminal goal.
struct Episode {
  ObstacleSpec obstacle;
  MissionConfig mission;
};
Episode random_trefoil_episode(const MissionConfig& base, std::uint64_t seed);

struct DaggerResult {
  std::vector<Demonstration> dataset;
  std::vector<std::size_t> size_after_iteration;
  std::optional<TrainResult> policy;  // trained on the final dataset
};

/// Iteration 0 flies the expert; later iterations fly the student trained on
/// everything collected so far and label every visited observation with the
/// expert. Pairs are split evenly across iterations.
DaggerResult dagger_collect(const DaggerConfig& cfg, std::uint64_t seed,
                            const std::function<void(const std::string&)>& progress = {});

}  // namespace dpanther
