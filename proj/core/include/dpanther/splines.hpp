#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dpanther {

using Vec3 = Eigen::Vector3d;

/// Shape of a clamped uniform B-spline family: degree p, m+1 knots, dimension d.
/// The family has m-p control points and m-2p polynomial segments.
struct SplineSpace {
  int degree = 3;
  int last_knot = 12;  // m
  int dim = 3;

  int num_control_points() const { return last_knot - degree; }
  int num_segments() const { return last_knot - 2 * degree; }

  /// Throws std::invalid_argument when the knot/degree counts are inconsistent.
  /// Degree 0 is accepted so that derivatives of linear splines stay representable.
  void validate() const;

  bool operator==(const SplineSpace&) const = default;

  /// Planned UAV position: 9 control points, 6 segments.
  static constexpr SplineSpace uav_position() { return {3, 12, 3}; }
  /// Predicted obstacle path: 10 control points, 7 segments.
  static constexpr SplineSpace obstacle() { return {3, 13, 3}; }
  /// Yaw angle: same knot structure as the position spline.
  static constexpr SplineSpace yaw() { return {3, 12, 1}; }
};

/// Clamped uniform knot vector over [t_start, t_start + total_time].
std::vector<double> make_knots(const SplineSpace& space, double t_start, double total_time);

/// Nonzero basis functions (and their derivatives up to n_ders) at t.
/// Row k of the result holds the k-th derivative of the degree+1 basis
/// functions that are active on `span`; the first active index is span-degree.
Eigen::MatrixXd basis_derivatives(std::span<const double> knots, int degree, int span, double t,
                                  int n_ders);

/// Index of the knot span containing t (clamped to the valid range).
int find_span(std::span<const double> knots, int degree, int num_control_points, double t);

class Spline {
 public:
  /// control_points is dim x (n+1); column l is q_l.
  Spline(const SplineSpace& space, double t_start, double total_time,
         Eigen::MatrixXd control_points);

  const SplineSpace& space() const { return space_; }
  int degree() const { return space_.degree; }
  int dim() const { return space_.dim; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_start_ + total_time_; }
  double total_time() const { return total_time_; }
  const std::vector<double>& knots() const { return knots_; }
  const Eigen::MatrixXd& control_points() const { return control_points_; }
  Eigen::VectorXd control_point(int l) const { return control_points_.col(l); }

  /// Value of the order-th time derivative at t. Throws std::out_of_range when t
  /// lies outside the domain and std::invalid_argument when order > degree.
  Eigen::VectorXd eval(double t, int order = 0) const;

  /// Same as eval() for 3-D splines; order 0 runs de Boor's algorithm on the stack.
  Vec3 eval3(double t, int order = 0) const;

  /// Evaluates with the polynomial piece of knot segment `segment` (0-based),
  /// i.e. one-sided at the segment's end knots. Used by quadrature rules that
  /// must not straddle discontinuities of the highest derivative.
  Eigen::VectorXd eval_on_segment(int segment, double t, int order) const;

  /// Spline of degree p-1 representing d/dt of this one.
  Spline derivative() const;

  /// Same knots, different control points.
  Spline with_control_points(Eigen::MatrixXd control_points) const;

 private:
  double clamp_time(double t) const;

  SplineSpace space_;
  double t_start_;
  double total_time_;
  std::vector<double> knots_;
  Eigen::MatrixXd control_points_;
};

/// Least-squares fit of `values` (dim x N) sampled at `times` into `space`.
/// The knot interval is [min(times), max(times)].
Spline fit(const SplineSpace& space, std::span<const double> times, const Eigen::MatrixXd& values);

/// Basis matrices of a clamped uniform spline space, sampled at fixed fractions
/// u in [0, 1] of the time interval. Because the knots are uniform, the matrices
/// do not depend on the total time; derivative rows are scaled by 1/T^order.
class SampledBasis {
 public:
  SampledBasis(const SplineSpace& space, std::vector<double> fractions, int max_order);

  int num_samples() const { return static_cast<int>(fractions_.size()); }
  const std::vector<double>& fractions() const { return fractions_; }
  /// num_samples x num_control_points, for a spline with unit total time.
  const Eigen::MatrixXd& matrix(int order) const { return matrices_.at(order); }

  /// dim x num_samples values of the order-th derivative for the given control points.
  Eigen::MatrixXd evaluate(const Eigen::MatrixXd& control_points, double total_time,
                           int order) const;

 private:
  SplineSpace space_;
  std::vector<double> fractions_;
  std::vector<Eigen::MatrixXd> matrices_;
};

/// One planned mode: the four free position control points q3..q6 and the total time.
struct ActionTuple {
  std::array<Vec3, 4> qhat{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  double total_time = 1.0;

  static constexpr int kSize = 13;
  using Vector = Eigen::Matrix<double, kSize, 1>;

  /// (q3.x, q3.y, q3.z, ..., q6.z, T)
  Vector flatten() const;
  static ActionTuple unflatten(const Vector& v);
};

/// Full 9-control-point position spline in S^3_{3,12} that starts at `start`
/// with velocity v_in and acceleration a_in, takes q3..q6 from `action`, and
/// ends at rest (q7 = q8 = q6).
Spline impose_boundary_conditions(const ActionTuple& action, const Vec3& start, const Vec3& v_in,
                                  const Vec3& a_in, double t_start = 0.0);

}  // namespace dpanther
