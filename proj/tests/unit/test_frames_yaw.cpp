#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dpanther/frames.hpp"
#include "dpanther/yaw.hpp"

namespace dpanther {
namespace {

constexpr double kPi = std::numbers::pi;

Vec3 random_xi(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  return xi_from_acceleration(Vec3(u(rng), u(rng), u(rng)));
}

TEST(Quaternion, RotationIsOrthonormal) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Matrix3d R = rotation_from_xi_psi(random_xi(rng), ang(rng));
    EXPECT_LT((R.transpose() * R - Eigen::Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
  }
}

TEST(Attitude, ThirdAxisIsThrustDirection) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const Vec3 xi = random_xi(rng);
    const Eigen::Matrix3d R = rotation_from_xi_psi(xi, ang(rng));
    EXPECT_LT((R.col(2) - xi.normalized()).norm(), 1e-12);
  }
}

TEST(Attitude, HoverYawIsRotationAboutZ) {
  for (double psi : {-2.0, -0.3, 0.0, 1.1, 3.0}) {
    const Eigen::Matrix3d R = rotation_from_xi_psi(Vec3(0, 0, kGravity), psi);
    EXPECT_LT((R - rot_z(psi)).norm(), 1e-12);
  }
}

TEST(Attitude, ThrustRotationMatchesQuaternionFactor) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 xi = random_xi(rng);
    const double psi = 0.1 * i;
    EXPECT_LT((thrust_rotation(xi) * rot_z(psi) - rotation_from_xi_psi(xi, psi)).norm(), 1e-12);
  }
}

TEST(Attitude, SingularThrustThrows) {
  EXPECT_THROW(attitude_from_xi_psi(Vec3::Zero(), 0.0), std::domain_error);
  EXPECT_THROW(attitude_from_xi_psi(Vec3(0, 0, -1), 0.0), std::domain_error);
}

TEST(PsiFromB1, InvertsTheAttitude) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ang(-kPi + 1e-6, kPi);
  for (int i = 0; i < 300; ++i) {
    const Vec3 xi = random_xi(rng);
    const double psi = ang(rng);
    const Vec3 b1 = rotation_from_xi_psi(xi, psi).col(0);
    EXPECT_NEAR(psi_from_b1(xi, b1), psi, 1e-9);
  }
  EXPECT_THROW(psi_from_b1(Vec3(0, 0, 1), Vec3(0, 0, 1)), std::invalid_argument);
  EXPECT_THROW(psi_from_b1(Vec3(0, 0, 1), Vec3(2, 0, 0)), std::invalid_argument);
}

TEST(WrapAngle, HalfOpenInterval) {
  EXPECT_NEAR(wrap_angle(kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_NEAR(wrap_angle(7.0), 7.0 - 2 * kPi, 1e-12);
}

TEST(FrameF, RoundTripAndRigidity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    UAVState s;
    s.p = Vec3(u(rng), u(rng), u(rng));
    s.psi = u(rng);
    const Vec3 x(u(rng), u(rng), u(rng));
    const Vec3 y(u(rng), u(rng), u(rng));
    for (VectorKind kind : {VectorKind::kPoint, VectorKind::kFree}) {
      EXPECT_LT((f_to_world(s, world_to_f(s, x, kind), kind) - x).norm(), 1e-12);
    }
    EXPECT_NEAR((world_to_f(s, x, VectorKind::kPoint) - world_to_f(s, y, VectorKind::kPoint)).norm(),
                (x - y).norm(), 1e-12);
    EXPECT_NEAR(world_to_f(s, x, VectorKind::kFree).z(), x.z(), 1e-12);
    Eigen::Matrix3Xd pts(3, 2);
    pts << x, y;
    const Eigen::Matrix3Xd f = world_to_f(s, pts, VectorKind::kPoint);
    EXPECT_LT((f.col(1) - world_to_f(s, y, VectorKind::kPoint)).norm(), 1e-12);
  }
  UAVState s;
  s.psi = kPi / 2;
  EXPECT_LT((world_to_f(s, Vec3(0, 1, 0), VectorKind::kFree) - Vec3(1, 0, 0)).norm(), 1e-12);
}

// Objective of the yaw problem: alignment of b1 with the obstacle direction.
double alignment(const Vec3& b1, const Vec3& r) { return b1.dot(r) / r.norm(); }

TEST(ClosedFormYaw, BeatsCircleSearch) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 xi = random_xi(rng);
    const Vec3 r(u(rng), u(rng), u(rng));
    const Vec3 b1 = b1_closed_form(r, xi);
    EXPECT_NEAR(b1.norm(), 1.0, 1e-12);
    EXPECT_NEAR(b1.dot(xi), 0.0, 1e-10);
    const Eigen::Matrix3d Rxi = thrust_rotation(xi);
    double best = -2.0;
    for (int k = 0; k < 20000; ++k) {
      const double psi = 2 * kPi * k / 20000.0;
      best = std::max(best, alignment(std::cos(psi) * Rxi.col(0) + std::sin(psi) * Rxi.col(1), r));
    }
    EXPECT_GE(alignment(b1, r), best - 1e-4);
  }
}

TEST(ClosedFormYaw, DegenerateUsesFallback) {
  const Vec3 xi(0, 0, kGravity);
  const Vec3 b1 = b1_closed_form(Vec3(0, 0, 2), xi, Vec3(0, 1, 0.3));
  EXPECT_LT((b1 - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(UnwrapAngles, RemovesJumps) {
  std::vector<double> a{3.0, -3.0, -2.9, 3.1};
  unwrap_angles(a);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(std::abs(a[i] - a[i - 1]), kPi);
  EXPECT_NEAR(a[1], -3.0 + 2 * kPi, 1e-12);
}

TEST(PsiProfile, LooksAtTheObstacle) {
  // Hovering UAV at the origin, obstacle fixed at (0, 2, 0): yaw is pi/2 throughout.
  const Spline pos(SplineSpace::uav_position(), 0.0, 3.0, Eigen::MatrixXd::Zero(3, 9));
  Eigen::MatrixXd oq = Eigen::MatrixXd::Zero(3, 10);
  oq.row(1).setConstant(2.0);
  const Spline obst(SplineSpace::obstacle(), 0.0, 3.0, oq);
  const PsiTrajectory p = psi_profile(pos, obst);
  EXPECT_EQ(p.spline.space(), SplineSpace::yaw());
  EXPECT_LT(p.fit_rms, 1e-9);
  for (double t : {0.0, 1.3, 3.0}) EXPECT_NEAR(wrap_angle(p.spline.eval(t)(0)), kPi / 2, 1e-9);
}

TEST(PsiProfile, ConstantPsi) {
  const PsiTrajectory p = constant_psi(0.7, 1.0, 2.0);
  EXPECT_NEAR(p.spline.eval(2.0)(0), 0.7, 1e-12);
  EXPECT_NEAR(p.spline.eval(2.0, 1)(0), 0.0, 1e-12);
}

}  // namespace
}  // namespace dpanther
