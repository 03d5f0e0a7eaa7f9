#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dpanther/assignment.hpp"
#include "dpanther/costs.hpp"
#include "dpanther/expert.hpp"
#include "dpanther/sim.hpp"
#include "dpanther/student.hpp"

namespace dpanther {

using ProgressFn = std::function<void(const std::string&)>;

/// Every tunable of the experiments. Loaded from a JSON file whose keys mirror
/// the field names; missing keys keep their defaults.
struct ExperimentConfig {
  CostWeights weights;
  DynamicLimits limits;
  ExpertConfig expert;
  MissionConfig mission;  // its weights/limits/expert are overwritten by the above
  TrainConfig train;
  int static_demos = 500;
  int dagger_pairs = 3000;
  int dagger_iterations = 3;
  double dagger_episode = 12.0;

  /// Full-size datasets: 2000 static demonstrations and 23000 DAgger pairs.
  void apply_paper_scale();
  /// Mission config with the shared weights, limits and expert settings.
  MissionConfig mission_config() const;
  TrainConfig train_config(AssignmentVariant variant, double eps, std::uint64_t seed) const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
/// Hash of the canonical JSON form; printed in every output header.
std::string config_hash(const ExperimentConfig& cfg);

// ---- static obstacle scenario -------------------------------------------------

inline const Vec3 kStaticStart{0.0, 0.0, 1.0};
inline const Vec3 kStaticObstacle{2.5, 0.0, 1.0};
inline constexpr double kStaticGoalRange = 1.7;
inline constexpr int kStaticGridSize = 8;

/// Goal (7, a, 1 + b) of grid cell (i_y, i_z) with a, b evenly spaced in [-1.7, 1.7].
Vec3 static_grid_goal(int i_y, int i_z);
ObstacleSpec static_obstacle_spec();
/// Observation from rest at the start looking along +x.
Observation static_observation(const Vec3& g_term, const ExperimentConfig& cfg);

/// Expert demonstrations for goals drawn uniformly from the grid's range.
std::vector<Demonstration> generate_static_demos(const ExperimentConfig& cfg, int count,
                                                 std::uint64_t seed, const ProgressFn& progress = {});

struct GridCell {
  int i_y = 0;
  int i_z = 0;
  Vec3 g_term = Vec3::Zero();
  int n_candidates = 0;
  int n_collision_free = 0;
  double best_cost = 0.0;  // cheapest collision-free candidate, +inf if none
  double latency_s = 0.0;
};

std::vector<GridCell> evaluate_static_grid(const Planner& planner, const ExperimentConfig& cfg);

// ---- imitation metrics ----------------------------------------------------------

/// Deterministic shuffle and split; the first part has round(fraction * n) items.
std::pair<std::vector<Demonstration>, std::vector<Demonstration>> split_dataset(
    std::span<const Demonstration> data, double fraction, std::uint64_t seed);

/// Per-kappa position MSE: for each demonstration the student heads are
/// LSA-assigned to the expert modes and the assigned pairs are ranked by
/// MSE; bucket kappa holds the kappa-th smallest (demos with n_e <= kappa skip it).
struct MseByKappa {
  std::vector<std::vector<double>> buckets;  // size n_s
  double mean(int kappa) const;
  double overall_mean() const;
};

MseByKappa evaluate_mse(const Policy& policy, std::span<const Demonstration> data);

struct PolicyVariant {
  AssignmentVariant variant = AssignmentVariant::kLSA;
  double eps = 0.0;
  std::string label() const;  // e.g. "LSA", "RWTAr-0.05"
};

/// LSA plus RWTAr and RWTAc for eps in {0, 0.05, 0.15, 0.25, 0.35}.
std::vector<PolicyVariant> standard_policy_set();

// ---- missions -------------------------------------------------------------------

inline const std::array<ObstacleKind, 4> kGeneralizationKinds{
    ObstacleKind::kStatic, ObstacleKind::kSquare, ObstacleKind::kEight, ObstacleKind::kEpitrochoid};

/// Obstacle between the two goals of the back-and-forth mission.
ObstacleSpec generalization_obstacle(ObstacleKind kind, std::uint64_t seed);
/// Back-and-forth between (0, 0, 1) and (10, 0, 1).
MissionConfig back_and_forth_mission(const ExperimentConfig& cfg);

/// Table-II style counts of replans by number of collision-free candidates.
struct CollisionFreeSummary {
  int replans = 0;
  int zero = 0;         // no collision-free candidate
  int one_to_three = 0;
  int four_to_six = 0;  // four or more
  double percent(int count) const { return replans ? 100.0 * count / replans : 0.0; }
};
CollisionFreeSummary summarize(const MissionLog& log);

/// Epitrochoid obstacles scattered between x = 0 and x = 15.
std::vector<ObstacleSpec> multi_obstacle_world(int n_obstacles, std::uint64_t seed);
MissionConfig multi_obstacle_mission(const ExperimentConfig& cfg);

/// Flies until the goal is first reached (or `duration` elapses) and returns
/// the log truncated at that moment.
MissionLog run_to_goal(const Planner& planner, std::span<const ObstacleSpec> world,
                       const MissionConfig& mission, double duration);

// ---- self test -------------------------------------------------------------------

struct SelftestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// The brute-force and finite-difference oracles: LSA enumeration, yaw circle
/// search, spline round trip, loss gradient check. `lsa` lets a caller
/// substitute a (possibly broken) assignment routine.
std::vector<SelftestResult> run_selftest(
    std::uint64_t seed,
    const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& lsa = lsa_assign);

}  // namespace dpanther
