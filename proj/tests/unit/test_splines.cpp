#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "dpanther/splines.hpp"

namespace dpanther {
namespace {

// Textbook Cox-de Boor recursion, evaluated from scratch for every basis function.
double cox_de_boor(const std::vector<double>& u, int i, int p, double t) {
  if (p == 0) {
    const bool last = t == u.back() && u[i] < u[i + 1] && u[i + 1] == u.back();
    return (u[i] <= t && t < u[i + 1]) || last ? 1.0 : 0.0;
  }
  double left = 0.0, right = 0.0;
  if (u[i + p] > u[i]) left = (t - u[i]) / (u[i + p] - u[i]) * cox_de_boor(u, i, p - 1, t);
  if (u[i + p + 1] > u[i + 1]) {
    right = (u[i + p + 1] - t) / (u[i + p + 1] - u[i + 1]) * cox_de_boor(u, i + 1, p - 1, t);
  }
  return left + right;
}

Eigen::MatrixXd random_points(int dim, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Eigen::MatrixXd m(dim, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < dim; ++r) m(r, c) = u(rng);
  }
  return m;
}

TEST(SplineSpace, CountsMatchThePlannerFamilies) {
  EXPECT_EQ(SplineSpace::uav_position().num_control_points(), 9);
  EXPECT_EQ(SplineSpace::uav_position().num_segments(), 6);
  EXPECT_EQ(SplineSpace::obstacle().num_control_points(), 10);
  EXPECT_EQ(SplineSpace::obstacle().num_segments(), 7);
  EXPECT_EQ(SplineSpace::yaw().num_control_points(), 9);
}

TEST(SplineSpace, RejectsInconsistentShapes) {
  EXPECT_THROW((SplineSpace{3, 6, 3}.validate()), std::invalid_argument);
  EXPECT_THROW((SplineSpace{-1, 5, 1}.validate()), std::invalid_argument);
  EXPECT_THROW((SplineSpace{3, 12, 0}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((SplineSpace{0, 3, 1}.validate()));
}

TEST(Knots, ClampedAndUniform) {
  const auto k = make_knots(SplineSpace::uav_position(), 2.0, 6.0);
  ASSERT_EQ(k.size(), 13u);
  for (int i = 0; i <= 3; ++i) {
    EXPECT_DOUBLE_EQ(k[i], 2.0);
    EXPECT_DOUBLE_EQ(k[12 - i], 8.0);
  }
  for (int i = 3; i < 9; ++i) EXPECT_NEAR(k[i + 1] - k[i], 1.0, 1e-12);
  EXPECT_THROW(make_knots(SplineSpace::uav_position(), 0.0, 0.0), std::invalid_argument);
}

TEST(Spline, MatchesCoxDeBoorRecursion) {
  std::mt19937_64 rng(3);
  for (const SplineSpace space : {SplineSpace::uav_position(), SplineSpace::obstacle(),
                                  SplineSpace{2, 9, 2}, SplineSpace{1, 5, 1}}) {
    const Eigen::MatrixXd q = random_points(space.dim, space.num_control_points(), rng);
    const Spline s(space, -1.0, 3.5, q);
    for (int k = 0; k <= 50; ++k) {
      const double t = -1.0 + 3.5 * k / 50.0;
      Eigen::VectorXd expected = Eigen::VectorXd::Zero(space.dim);
      for (int i = 0; i < space.num_control_points(); ++i) {
        expected += cox_de_boor(s.knots(), i, space.degree, t) * q.col(i);
      }
      EXPECT_LT((s.eval(t) - expected).norm(), 1e-12) << "t=" << t;
    }
  }
}

TEST(Spline, PartitionOfUnityAndInterpolatedEnds) {
  const SplineSpace space = SplineSpace::obstacle();
  const auto knots = make_knots(space, 0.0, 1.0);
  for (int k = 0; k <= 40; ++k) {
    const double t = k / 40.0;
    const int span = find_span(knots, 3, 10, t);
    const Eigen::MatrixXd b = basis_derivatives(knots, 3, span, t, 2);
    EXPECT_NEAR(b.row(0).sum(), 1.0, 1e-13);
    EXPECT_NEAR(b.row(1).sum(), 0.0, 1e-11);
    EXPECT_NEAR(b.row(2).sum(), 0.0, 1e-9);
    EXPECT_GE(b.row(0).minCoeff(), 0.0);
  }
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd q = random_points(3, 10, rng);
  const Spline s(space, 0.0, 2.0, q);
  EXPECT_LT((s.eval(0.0) - q.col(0)).norm(), 1e-14);
  EXPECT_LT((s.eval(2.0) - q.col(9)).norm(), 1e-14);
}

TEST(Spline, DerivativesAgreeWithFiniteDifferences) {
  std::mt19937_64 rng(5);
  const Spline s(SplineSpace::uav_position(), 0.3, 2.7, random_points(3, 9, rng));
  const double h = 1e-6;
  for (int k = 1; k < 30; ++k) {
    const double t = 0.3 + 2.7 * (k + 0.37) / 30.0;
    for (int order = 1; order <= 2; ++order) {
      const Eigen::VectorXd fd = (s.eval(t + h, order - 1) - s.eval(t - h, order - 1)) / (2 * h);
      EXPECT_LT((s.eval(t, order) - fd).norm(), 1e-5 * (1.0 + fd.norm()));
    }
  }
}

TEST(Spline, DerivativeSplineEqualsEvalOrder) {
  std::mt19937_64 rng(6);
  const Spline s(SplineSpace::uav_position(), 0.0, 4.0, random_points(3, 9, rng));
  const Spline d1 = s.derivative();
  const Spline d2 = d1.derivative();
  const Spline d3 = d2.derivative();
  EXPECT_EQ(d1.degree(), 2);
  EXPECT_EQ(d1.control_points().cols(), 8);
  EXPECT_EQ(d3.degree(), 0);
  for (int k = 0; k < 37; ++k) {
    const double t = 4.0 * (k + 0.5) / 37.0;
    EXPECT_LT((d1.eval(t) - s.eval(t, 1)).norm(), 1e-10);
    EXPECT_LT((d2.eval(t) - s.eval(t, 2)).norm(), 1e-9);
    EXPECT_LT((d3.eval(t) - s.eval(t, 3)).norm(), 1e-8);
    EXPECT_LT((s.eval3(t, 2) - s.eval(t, 2)).norm(), 1e-12);
  }
}

TEST(Spline, EvalOutsideDomainThrows) {
  const Spline s(SplineSpace::uav_position(), 0.0, 1.0, Eigen::MatrixXd::Zero(3, 9));
  EXPECT_THROW(s.eval(1.5), std::out_of_range);
  EXPECT_THROW(s.eval(-0.1), std::out_of_range);
  EXPECT_THROW(s.eval(0.5, 4), std::invalid_argument);
  EXPECT_THROW(Spline(SplineSpace::uav_position(), 0.0, 1.0, Eigen::MatrixXd::Zero(3, 8)),
               std::invalid_argument);
}

TEST(Spline, EvalOnSegmentIsOneSidedAtKnots) {
  std::mt19937_64 rng(7);
  const Spline s(SplineSpace::uav_position(), 0.0, 6.0, random_points(3, 9, rng));
  // The jerk is piecewise constant; at the shared knot t = 2 each side keeps its own value.
  const Eigen::VectorXd left = s.eval_on_segment(1, 2.0, 3);
  const Eigen::VectorXd right = s.eval_on_segment(2, 2.0, 3);
  EXPECT_LT((left - s.eval(1.5, 3)).norm(), 1e-9);
  EXPECT_LT((right - s.eval(2.5, 3)).norm(), 1e-9);
}

TEST(Fit, ReproducesASplineInTheSameSpace) {
  std::mt19937_64 rng(8);
  const Spline truth(SplineSpace::obstacle(), 1.0, 5.0, random_points(3, 10, rng));
  std::vector<double> times;
  Eigen::MatrixXd values(3, 50);
  for (int i = 0; i < 50; ++i) {
    times.push_back(1.0 + 5.0 * i / 49.0);
    values.col(i) = truth.eval(times.back());
  }
  const Spline fitted = fit(SplineSpace::obstacle(), times, values);
  EXPECT_NEAR(fitted.t_start(), 1.0, 1e-15);
  EXPECT_NEAR(fitted.t_end(), 6.0, 1e-12);
  EXPECT_LT((fitted.control_points() - truth.control_points()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SampledBasis, AgreesWithSplineEvaluation) {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd q = random_points(3, 9, rng);
  std::vector<double> u;
  for (int i = 0; i < 13; ++i) u.push_back(i / 12.0);
  const SampledBasis basis(SplineSpace::uav_position(), u, 3);
  const double T = 3.3;
  const Spline s(SplineSpace::uav_position(), 0.0, T, q);
  for (int order = 0; order <= 2; ++order) {
    const Eigen::MatrixXd v = basis.evaluate(q, T, order);
    for (int i = 0; i < 13; ++i) {
      EXPECT_LT((v.col(i) - s.eval(u[i] * T, order)).norm(), 1e-9) << order << " " << i;
    }
  }
}

TEST(ActionTuple, FlattenRoundTrip) {
  ActionTuple a;
  for (int k = 0; k < 4; ++k) a.qhat[k] = Vec3(k, -k, 0.5 * k);
  a.total_time = 2.25;
  const ActionTuple::Vector v = a.flatten();
  EXPECT_DOUBLE_EQ(v(3), 1.0);
  EXPECT_DOUBLE_EQ(v(12), 2.25);
  const ActionTuple b = ActionTuple::unflatten(v);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(a.qhat[k], b.qhat[k]);
  EXPECT_EQ(b.total_time, 2.25);
}

TEST(BoundaryConditions, EndpointsMatchImposedState) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> ut(0.5, 6.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 d(u(rng), u(rng), u(rng));
    const Vec3 v(u(rng), u(rng), u(rng));
    const Vec3 a(u(rng), u(rng), u(rng));
    ActionTuple act;
    for (auto& q : act.qhat) q = Vec3(u(rng), u(rng), u(rng)) * 3.0;
    act.total_time = ut(rng);
    const Spline s = impose_boundary_conditions(act, d, v, a, 1.0);
    const double tf = 1.0 + act.total_time;
    auto tol = [](const Vec3& x) { return 1e-9 * (1.0 + x.norm()); };
    EXPECT_LT((s.eval3(1.0) - d).norm(), tol(d));
    EXPECT_LT((s.eval3(1.0, 1) - v).norm(), tol(v));
    EXPECT_LT((s.eval3(1.0, 2) - a).norm(), tol(a));
    EXPECT_LT((s.eval3(tf) - act.qhat[3]).norm(), tol(act.qhat[3]));
    EXPECT_LT(s.eval3(tf, 1).norm(), 1e-9);
    EXPECT_LT(s.eval3(tf, 2).norm(), 1e-9);
  }
}

}  // namespace
}  // namespace dpanther
