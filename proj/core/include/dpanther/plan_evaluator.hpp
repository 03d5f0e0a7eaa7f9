#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "dpanther/costs.hpp"
#include "dpanther/splines.hpp"
#include "dpanther/yaw.hpp"

namespace dpanther {

/// A single planning query expressed in frame f: the trajectory starts at the
/// origin at t = 0 with velocity v0 and acceleration a0.
struct PlanningProblem {
  Vec3 v0 = Vec3::Zero();
  Vec3 a0 = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  Spline obstacle;  // must cover [0, T] for every candidate T
  Vec3 rho = Vec3::Constant(0.55);  // half-extents used for the penetration penalty
};

struct PlanEvaluation {
  CostBreakdown objective;
  double dyn_penalty = 0.0;
  double penetration = 0.0;  // sum of squared penetration depths at the quadrature nodes
  double augmented = 0.0;    // objective + lambda * dyn_penalty
};

/// Evaluates c_obj, c_dyn_lim and the penetration penalty of an action with
/// basis matrices precomputed once. Agrees with c_obj()/c_dyn_lim() on the
/// spline built by impose_boundary_conditions() followed by psi_profile().
class PlanEvaluator {
 public:
  PlanEvaluator(const CostWeights& weights, const DynamicLimits& limits,
                int yaw_samples = kDefaultYawSamples,
                int intervals_per_segment = kQuadratureIntervalsPerSegment);

  PlanEvaluation evaluate(const PlanningProblem& problem, const ActionTuple& action) const;

  const CostWeights& weights() const { return weights_; }
  const DynamicLimits& limits() const { return limits_; }

 private:
  // Nonzero basis values of one sample: control points first..first+3.
  struct LocalBasis {
    int first = 0;
    std::array<std::array<double, 4>, 4> value{};  // [order][j]
  };

  CostWeights weights_;
  DynamicLimits limits_;
  int yaw_samples_;
  std::vector<double> yaw_fractions_;
  std::vector<LocalBasis> yaw_basis_;          // unit total time
  Eigen::Matrix<double, 9, Eigen::Dynamic> yaw_fit_;  // least-squares operator
  QuadratureRule rule_;
  std::vector<LocalBasis> quad_basis_;         // segment-aware, unit total time
  // Derivative control points for unit total time: V = Q * vel_op_ / T, etc.
  Eigen::Matrix<double, 9, 8> vel_op_;
  Eigen::Matrix<double, 8, 7> acc_op_;
  Eigen::Matrix<double, 7, 6> jerk_op_;
};

}  // namespace dpanther
