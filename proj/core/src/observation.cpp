#include "dpanther/observation.hpp"

namespace dpanther {

Observation::Vector Observation::flatten() const {
  Vector x;
  x.segment<3>(0) = v;
  x.segment<3>(3) = a;
  x.segment<3>(6) = g;
  x(9) = psi_dot;
  for (int k = 0; k < kObstacleControlPoints; ++k) x.segment<3>(10 + 3 * k) = obst_cps[k];
  x.segment<3>(40) = s_obst;
  return x;
}

Observation Observation::unflatten(const Vector& x) {
  Observation o;
  o.v = x.segment<3>(0);
  o.a = x.segment<3>(3);
  o.g = x.segment<3>(6);
  o.psi_dot = x(9);
  for (int k = 0; k < kObstacleControlPoints; ++k) o.obst_cps[k] = x.segment<3>(10 + 3 * k);
  o.s_obst = x.segment<3>(40);
  return o;
}

Spline Observation::obstacle_spline(double prediction_horizon) const {
  Eigen::Matrix3Xd cps(3, kObstacleControlPoints);
  for (int k = 0; k < kObstacleControlPoints; ++k) cps.col(k) = obst_cps[k];
  return Spline(SplineSpace::obstacle(), 0.0, prediction_horizon, cps);
}

}  // namespace dpanther
