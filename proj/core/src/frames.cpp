#include "dpanther/frames.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpanther {

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Eigen::Matrix3d Quaternion::to_rotation() const {
  Eigen::Matrix3d R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),  //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

Quaternion quat_mul(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

namespace {

Vec3 unit_xi(const Vec3& xi) {
  const double n = xi.norm();
  if (!(n > 0.0)) throw std::domain_error("xi must be nonzero");
  const Vec3 xb = xi / n;
  if (xb.z() <= -1.0 + 1e-9) {
    throw std::domain_error("thrust direction antiparallel to world z is singular");
  }
  return xb;
}

Quaternion thrust_quaternion(const Vec3& xb) {
  const double s = 1.0 / std::sqrt(2.0 * (1.0 + xb.z()));
  return {s * (1.0 + xb.z()), -s * xb.y(), s * xb.x(), 0.0};
}

}  // namespace

Quaternion attitude_from_xi_psi(const Vec3& xi, double psi) {
  const Quaternion q_xi = thrust_quaternion(unit_xi(xi));
  const Quaternion q_psi{std::cos(psi / 2), 0.0, 0.0, std::sin(psi / 2)};
  return q_xi * q_psi;
}

Eigen::Matrix3d rotation_from_xi_psi(const Vec3& xi, double psi) {
  return attitude_from_xi_psi(xi, psi).to_rotation();
}

Eigen::Matrix3d thrust_rotation(const Vec3& xi) {
  const Vec3 xb = unit_xi(xi);
  const double k = 1.0 / (1.0 + xb.z());
  Eigen::Matrix3d R;
  R << 1.0 - xb.x() * xb.x() * k, -xb.x() * xb.y() * k, xb.x(),  //
      -xb.x() * xb.y() * k, 1.0 - xb.y() * xb.y() * k, xb.y(),    //
      -xb.x(), -xb.y(), xb.z();
  return R;
}

double wrap_angle(double angle) {
  constexpr double pi = std::numbers::pi;
  double w = std::remainder(angle, 2.0 * pi);
  if (w <= -pi) w += 2.0 * pi;
  return w;
}

double psi_from_b1(const Vec3& xi, const Vec3& b1) {
  const Vec3 xb = unit_xi(xi);
  if (std::abs(b1.norm() - 1.0) > 1e-6) throw std::invalid_argument("b1 must be a unit vector");
  if (std::abs(b1.dot(xb)) > 1e-6) throw std::invalid_argument("b1 must be perpendicular to xi");
  // R_xi^T b1 = (cos psi, sin psi, 0).
  const Vec3 local = thrust_rotation(xb).transpose() * b1;
  return wrap_angle(std::atan2(local.y(), local.x()));
}

Eigen::Matrix3d rot_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d R;
  R << c, -s, 0, s, c, 0, 0, 0, 1;
  return R;
}

Vec3 world_to_f(const UAVState& state, const Vec3& x, VectorKind kind) {
  const Eigen::Matrix3d r = rot_z(-state.psi);
  return kind == VectorKind::kPoint ? Vec3(r * (x - state.p)) : Vec3(r * x);
}

Vec3 f_to_world(const UAVState& state, const Vec3& x, VectorKind kind) {
  const Eigen::Matrix3d r = rot_z(state.psi);
  return kind == VectorKind::kPoint ? Vec3(r * x + state.p) : Vec3(r * x);
}

Eigen::Matrix3Xd world_to_f(const UAVState& state, const Eigen::Matrix3Xd& points,
                            VectorKind kind) {
  const Eigen::Matrix3d r = rot_z(-state.psi);
  if (kind == VectorKind::kFree) return r * points;
  return r * (points.colwise() - state.p);
}

Eigen::Matrix3Xd f_to_world(const UAVState& state, const Eigen::Matrix3Xd& points,
                            VectorKind kind) {
  const Eigen::Matrix3d r = rot_z(state.psi);
  Eigen::Matrix3Xd out = r * points;
  if (kind == VectorKind::kPoint) out.colwise() += state.p;
  return out;
}

}  // namespace dpanther
