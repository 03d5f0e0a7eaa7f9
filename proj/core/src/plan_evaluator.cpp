#include "dpanther/plan_evaluator.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dpanther/frames.hpp"

namespace dpanther {

namespace {

std::vector<double> uniform_fractions(int n) {
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = static_cast<double>(i) / (n - 1);
  return u;
}

// Maps control points of a unit-time 1-D spline in `space` to those of its derivative.
Eigen::MatrixXd derivative_operator(const SplineSpace& space) {
  const int n = space.num_control_points();
  Eigen::MatrixXd op(n, n - 1);
  for (int l = 0; l < n; ++l) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(1, n);
    e(0, l) = 1.0;
    op.row(l) = Spline({space.degree, space.last_knot, 1}, 0.0, 1.0, e).derivative().control_points();
  }
  return op;
}

double excess_sq(double value, double limit) {
  const double e = std::abs(value) - limit;
  return e > 0.0 ? e * e : 0.0;
}

}  // namespace

PlanEvaluator::PlanEvaluator(const CostWeights& weights, const DynamicLimits& limits,
                             int yaw_samples, int intervals_per_segment)
    : weights_(weights),
      limits_(limits),
      yaw_samples_(yaw_samples),
      yaw_fractions_(uniform_fractions(yaw_samples)),
      rule_(QuadratureRule::knot_aligned(SplineSpace::uav_position().num_segments(),
                                         intervals_per_segment)) {
  weights_.validate();
  limits_.validate();
  if (yaw_samples < 13) throw std::invalid_argument("PlanEvaluator needs >= 13 yaw samples");

  constexpr SplineSpace space = SplineSpace::uav_position();
  const std::vector<double> knots = make_knots(space, 0.0, 1.0);
  auto local_basis = [&](int span, double u) {
    const Eigen::MatrixXd ders = basis_derivatives(knots, space.degree, span, u, 3);
    LocalBasis b;
    b.first = span - space.degree;
    for (int k = 0; k <= 3; ++k) {
      for (int j = 0; j <= 3; ++j) b.value[k][j] = ders(k, j);
    }
    return b;
  };

  // The yaw space shares the position knots, so its basis is the position basis.
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(yaw_samples, 9);
  for (double u : yaw_fractions_) {
    const LocalBasis b = local_basis(find_span(knots, space.degree, 9, u), u);
    for (int j = 0; j <= 3; ++j) B(yaw_basis_.size(), b.first + j) = b.value[0][j];
    yaw_basis_.push_back(b);
  }
  Eigen::MatrixXd normal = B.transpose() * B;
  normal.diagonal().array() += 1e-12;
  yaw_fit_ = normal.ldlt().solve(B.transpose());

  for (int i = 0; i < rule_.size(); ++i) {
    quad_basis_.push_back(local_basis(space.degree + rule_.segment[i], rule_.fraction[i]));
  }

  vel_op_ = derivative_operator({3, 12, 1});
  acc_op_ = derivative_operator({2, 10, 1});
  jerk_op_ = derivative_operator({1, 8, 1});
}

PlanEvaluation PlanEvaluator::evaluate(const PlanningProblem& problem,
                                       const ActionTuple& action) const {
  const double T = action.total_time;
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("evaluate: T must be positive");
  const CostWeights& w = weights_;

  // Same control points as impose_boundary_conditions() with start at the origin.
  const double delta = T / 6.0;
  Eigen::Matrix<double, 3, 9> Q;
  Q.col(0).setZero();
  Q.col(1) = (delta / 3.0) * problem.v0;
  Q.col(2) = Q.col(1) + (2.0 * delta / 3.0) * (problem.v0 + 0.5 * delta * problem.a0);
  for (int k = 0; k < 4; ++k) Q.col(3 + k) = action.qhat[k];
  Q.col(7) = Q.col(6);
  Q.col(8) = Q.col(6);

  auto combine = [&Q](const LocalBasis& b, int order) {
    const auto& v = b.value[order];
    return Vec3(v[0] * Q.col(b.first) + v[1] * Q.col(b.first + 1) + v[2] * Q.col(b.first + 2) +
                v[3] * Q.col(b.first + 3));
  };
  const double inv_t2 = 1.0 / (T * T);

  // Closed-form yaw samples and their least-squares spline.
  Eigen::VectorXd psi(yaw_samples_);
  Vec3 previous_b1 = Vec3::UnitX();
  for (int i = 0; i < yaw_samples_; ++i) {
    const Vec3 xi = xi_from_acceleration(combine(yaw_basis_[i], 2) * inv_t2);
    const Vec3 r = problem.obstacle.eval3(yaw_fractions_[i] * T) - combine(yaw_basis_[i], 0);
    const Vec3 b1 = b1_closed_form(r, xi, previous_b1);
    const Eigen::Matrix3d r_xi = thrust_rotation(xi);
    double angle = std::atan2(r_xi.col(1).dot(b1), r_xi.col(0).dot(b1));
    if (i > 0) angle = psi(i - 1) + wrap_angle(angle - psi(i - 1));
    psi(i) = angle;
    previous_b1 = b1;
  }
  const Eigen::Matrix<double, 9, 1> psi_cps = yaw_fit_ * psi;

  // Knot-aligned Simpson quadrature; the same nodes sample the penetration penalty.
  const double cos_half = std::cos(w.fov_angle / 2.0);
  const double inv_t3 = inv_t2 / T;
  double jerk_int = 0.0;
  double yaw_int = 0.0;
  double fov_int = 0.0;
  double penetration = 0.0;
  for (int i = 0; i < rule_.size(); ++i) {
    const LocalBasis& b = quad_basis_[i];
    const double wq = rule_.weight[i] * T;
    double psi_q = 0.0;
    double psi_dd_q = 0.0;
    for (int j = 0; j <= 3; ++j) {
      psi_q += b.value[0][j] * psi_cps(b.first + j);
      psi_dd_q += b.value[2][j] * psi_cps(b.first + j);
    }
    psi_dd_q *= inv_t2;

    const Vec3 r = problem.obstacle.eval3(rule_.fraction[i] * T) - combine(b, 0);
    const double rn = r.norm();
    double f = 0.0;
    if (rn > 0.0) {
      const Eigen::Matrix3d r_xi = thrust_rotation(xi_from_acceleration(combine(b, 2) * inv_t2));
      const Vec3 b1 = std::cos(psi_q) * r_xi.col(0) + std::sin(psi_q) * r_xi.col(1);
      f = 1.0 / (1.0 + std::exp(-w.fov_sharpness * (b1.dot(r) / rn - cos_half)));
    }
    jerk_int += wq * (combine(b, 3) * inv_t3).squaredNorm();
    yaw_int += wq * psi_dd_q * psi_dd_q;
    fov_int += wq * f * f * f;
    const double depth = penetration_depth(r, problem.rho);
    penetration += depth * depth;
  }

  PlanEvaluation out;
  out.objective.jerk = w.jerk * jerk_int;
  out.objective.yaw = w.yaw * yaw_int;
  out.objective.fov = -w.fov * fov_int;
  out.objective.goal = w.goal * (Q.col(8) - problem.goal).squaredNorm();
  out.objective.time = w.time * T;

  const Eigen::Matrix<double, 3, 8> vel = Q * vel_op_ / T;
  const Eigen::Matrix<double, 3, 7> acc = vel * acc_op_ / T;
  const Eigen::Matrix<double, 3, 6> jerk = acc * jerk_op_ / T;
  const Eigen::Matrix<double, 1, 8> psi_dot = psi_cps.transpose() * vel_op_ / T;
  double dyn = 0.0;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 8; ++c) dyn += excess_sq(vel(r, c), limits_.v_max(r));
    for (int c = 0; c < 7; ++c) dyn += excess_sq(acc(r, c), limits_.a_max(r));
    for (int c = 0; c < 6; ++c) dyn += excess_sq(jerk(r, c), limits_.j_max(r));
  }
  for (int c = 0; c < 8; ++c) dyn += excess_sq(psi_dot(c), limits_.psi_dot_max);

  out.dyn_penalty = dyn;
  out.penetration = penetration;
  out.augmented = out.objective.total() + w.lambda * out.dyn_penalty;
  return out;
}

}  // namespace dpanther
