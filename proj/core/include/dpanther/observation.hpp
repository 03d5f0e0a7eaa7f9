#pragma once

#include <array>

#include <Eigen/Dense>

#include "dpanther/splines.hpp"

namespace dpanther {

/// Policy input, every vector expressed in frame f.
struct Observation {
  static constexpr int kObstacleControlPoints = 10;
  static constexpr int kSize = 43;
  using Vector = Eigen::Matrix<double, kSize, 1>;

  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
  Vec3 g = Vec3::Zero();
  double psi_dot = 0.0;
  std::array<Vec3, kObstacleControlPoints> obst_cps{};
  Vec3 s_obst = Vec3::Constant(0.8);

  /// (v, a, g, psi_dot, q_obst_0 .. q_obst_9, s_obst)
  Vector flatten() const;
  static Observation unflatten(const Vector& x);

  /// Predicted obstacle path in frame f, S^3_{3,13} over [0, prediction_horizon].
  Spline obstacle_spline(double prediction_horizon) const;
};

}  // namespace dpanther
