#pragma once

#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "dpanther/splines.hpp"
#include "dpanther/yaw.hpp"

namespace dpanther {

/// Weights of the planning objective
///   c_obj = a_j int |jerk|^2 + a_psi int psi''^2 - a_fov int inFOV^3 + a_g |p(t_f) - g|^2 + a_T T
/// plus the dynamic-limit multiplier lambda and the FOV cone model.
struct CostWeights {
  double jerk = 0.01;
  double yaw = 0.05;
  double fov = 0.5;
  double goal = 10.0;
  double time = 1.0;
  double lambda = 10.0;
  double fov_angle = std::numbers::pi / 2.0;  // full opening angle theta
  double fov_sharpness = 100.0;              // gamma of the logistic indicator

  void validate() const;
};

/// Per-axis limits applied to the derivative control points.
struct DynamicLimits {
  Vec3 v_max = Vec3::Constant(3.0);
  Vec3 a_max = Vec3::Constant(6.0);
  Vec3 j_max = Vec3::Constant(30.0);
  double psi_dot_max = 4.0;

  void validate() const;
};

/// Axis-aligned box sizes (full side lengths) of an obstacle and of the UAV.
struct BoxPair {
  Vec3 s_obst = Vec3::Constant(0.8);
  Vec3 s_uav = Vec3::Constant(0.3);

  /// Half-extents of the obstacle box inflated by the UAV box.
  Vec3 rho() const { return 0.5 * (s_obst + s_uav); }
  void validate() const;
};

/// Weighted objective terms; the FOV entry is already negative (a reward).
struct CostBreakdown {
  double jerk = 0.0;
  double yaw = 0.0;
  double fov = 0.0;
  double goal = 0.0;
  double time = 0.0;

  double total() const { return jerk + yaw + fov + goal + time; }
};

/// Smooth field-of-view membership sigma(gamma (b1 . r_hat - cos(theta/2))).
/// Throws std::invalid_argument when p == p_obst.
double in_fov(const Vec3& p, const Vec3& b1, const Vec3& p_obst, double theta, double gamma);

/// Composite Simpson rule whose panels never straddle a knot of the
/// position spline: every knot segment gets `intervals_per_segment` (even)
/// sub-intervals, so piecewise-polynomial integrands of degree <= 3 are exact.
struct QuadratureRule {
  std::vector<int> segment;        // knot segment of each node
  std::vector<double> fraction;    // node time as a fraction of the total time
  std::vector<double> weight;      // weight for a unit total time

  static QuadratureRule knot_aligned(int num_segments, int intervals_per_segment);
  int size() const { return static_cast<int>(fraction.size()); }
};

inline constexpr int kQuadratureIntervalsPerSegment = 12;
inline constexpr int kCollisionChecks = 100;

CostBreakdown c_obj(const Spline& pos, const PsiTrajectory& psi, const Spline& obst, const Vec3& goal,
                    const CostWeights& w);

/// Sum over velocity/acceleration/jerk control points and axes of
/// max(0, |cp| - limit)^2, plus the same for the yaw-rate control points.
double c_dyn_lim(const Spline& pos, const PsiTrajectory& psi, const DynamicLimits& lim);

/// c_obj + lambda * c_dyn_lim.
double augmented_cost(const Spline& pos, const PsiTrajectory& psi, const Spline& obst,
                      const Vec3& goal, const CostWeights& w, const DynamicLimits& lim);

/// True iff at each of n_check uniformly spaced times some axis separates the
/// UAV from the obstacle box inflated by the UAV box.
bool collision_free(const Spline& pos, const Spline& obst, const BoxPair& boxes,
                    int n_check = kCollisionChecks);

/// Penetration depth of `offset` (UAV minus obstacle centre) into a box of
/// half-extents `rho`; zero when outside.
double penetration_depth(const Vec3& offset, const Vec3& rho);

struct TimedPoint {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
};

/// Obstacle used by the safety-ratio metric.
struct ObstacleTrack {
  std::function<Vec3(double)> position;
  BoxPair boxes;

  static ObstacleTrack from_spline(Spline spline, const BoxPair& boxes);
};

/// min over t, obstacles i and axes j of |(p(t) - p_obs,i(t))_j| / (rho_i)_j.
double safety_ratio(std::span<const TimedPoint> log, std::span<const ObstacleTrack> obstacles);

/// min over t, i of max over axes j of the same ratio (> 1 iff no sample collides).
double separating_axis_ratio(std::span<const TimedPoint> log,
                             std::span<const ObstacleTrack> obstacles);

}  // namespace dpanther
