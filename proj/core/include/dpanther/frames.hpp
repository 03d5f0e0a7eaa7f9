#pragma once

#include <Eigen/Dense>

#include "dpanther/splines.hpp"

namespace dpanther {

inline constexpr double kGravity = 9.81;

/// Hamilton quaternion (w, x, y, z).
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quaternion identity() { return {}; }
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  double norm() const;
  /// Rotation matrix of the (assumed unit) quaternion.
  Eigen::Matrix3d to_rotation() const;
};

Quaternion quat_mul(const Quaternion& a, const Quaternion& b);
inline Quaternion operator*(const Quaternion& a, const Quaternion& b) { return quat_mul(a, b); }

/// Relative acceleration xi = a + g e_z.
inline Vec3 xi_from_acceleration(const Vec3& a) { return a + Vec3(0.0, 0.0, kGravity); }

/// Attitude q_b^w = q_xi * q_psi, where q_xi is the minimal rotation taking e_z
/// onto xi/|xi| and q_psi is a rotation by psi about z.
/// Throws std::domain_error when xi is zero or antiparallel to e_z.
Quaternion attitude_from_xi_psi(const Vec3& xi, double psi);

/// World-from-body rotation [b1 b2 b3] with b3 = xi/|xi|.
Eigen::Matrix3d rotation_from_xi_psi(const Vec3& xi, double psi);

/// Rotation of q_xi alone (psi = 0); rotation_from_xi_psi = thrust_rotation * rot_z(psi).
/// Closed form of the quaternion's matrix, with the same singularity.
Eigen::Matrix3d thrust_rotation(const Vec3& xi);

/// Yaw angle in (-pi, pi] such that rotation_from_xi_psi(xi, psi) * e_x == b1.
/// Throws std::invalid_argument when b1 is not a unit vector perpendicular to xi.
double psi_from_b1(const Vec3& xi, const Vec3& b1);

/// Rotation by `angle` about world z.
Eigen::Matrix3d rot_z(double angle);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

struct UAVState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
  double psi = 0.0;
  double psi_dot = 0.0;

  Vec3 xi() const { return xi_from_acceleration(a); }
};

enum class VectorKind { kPoint, kFree };

/// Coordinates in frame f (origin at the UAV, z up, same yaw as the body).
Vec3 world_to_f(const UAVState& state, const Vec3& x, VectorKind kind);
Vec3 f_to_world(const UAVState& state, const Vec3& x, VectorKind kind);

/// Applies world_to_f / f_to_world to every column of a 3 x N control-point matrix.
Eigen::Matrix3Xd world_to_f(const UAVState& state, const Eigen::Matrix3Xd& points, VectorKind kind);
Eigen::Matrix3Xd f_to_world(const UAVState& state, const Eigen::Matrix3Xd& points, VectorKind kind);

}  // namespace dpanther
