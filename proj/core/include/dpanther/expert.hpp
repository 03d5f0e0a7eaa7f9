#pragma once

#include <vector>

#include "dpanther/costs.hpp"
#include "dpanther/observation.hpp"
#include "dpanther/plan_evaluator.hpp"
#include "dpanther/splines.hpp"

namespace dpanther {

/// Multi-start penalty-method planner used as the imitation-learning expert.
struct ExpertConfig {
  int n_runs = 10;
  int n_s = 6;
  double t_pred = 6.0;
  double t_min = 0.5;
  double dedupe_threshold = 0.35;  // control-point RMS distance, meters
  double mu_coll = 1e3;
  double collision_margin = 0.05;  // added to rho inside the penetration penalty
  int max_iterations = 300;
  double fd_step = 1e-6;
  double v_nominal = 2.0;
  double time_slack = 1.0;
  Vec3 s_uav = Vec3::Constant(0.3);

  void validate() const;
};

/// Half-extents that contain the world-axis-aligned inflated box for every yaw
/// of frame f: the horizontal extents become the box's horizontal half-diagonal.
Vec3 yaw_invariant_rho(const Vec3& rho);

/// Planning problem seen by the expert for an observation (frame f).
PlanningProblem make_problem(const Observation& obs, const ExpertConfig& cfg);

/// Box pair the expert certifies its trajectories against (frame f).
BoxPair expert_boxes(const Observation& obs, const ExpertConfig& cfg);

/// Straight-line seed followed by lateral detours around the goal direction.
std::vector<ActionTuple> initial_guesses(const Observation& obs, int n_runs,
                                         const ExpertConfig& cfg);

struct SingleRunResult {
  ActionTuple action;
  double cost = 0.0;            // augmented cost (without the collision penalty)
  double penalized_cost = 0.0;  // augmented + mu_coll * penetration
  double penetration = 0.0;
  bool feasible = false;        // collision_free against expert_boxes()
  std::vector<double> trace;    // penalized cost after every accepted step
  int iterations = 0;
};

/// Descent over the 13 action scalars with forward-difference gradients,
/// BFGS directions and Armijo backtracking; T is projected onto
/// [t_min, t_pred] after every step. Deterministic given the seed.
SingleRunResult optimize_single(const ActionTuple& seed, const Observation& obs,
                                const ExpertConfig& cfg, const PlanEvaluator& evaluator);

struct ExpertSolution {
  ActionTuple action;
  double cost = 0.0;
  int seed_index = 0;
};

/// RMS over the four free control points of the Euclidean distances.
double control_point_rms(const ActionTuple& a, const ActionTuple& b);

/// Up to n_s distinct collision-free locally optimal actions, ascending cost.
/// Empty when every run ends in collision.
std::vector<ExpertSolution> expert_plan(const Observation& obs, const ExpertConfig& cfg,
                                        const PlanEvaluator& evaluator);

}  // namespace dpanther
