#include "dpanther/splines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dpanther {

void SplineSpace::validate() const {
  if (degree < 0) throw std::invalid_argument("spline degree must be nonnegative");
  if (dim < 1) throw std::invalid_argument("spline dimension must be positive");
  if (last_knot < 2 * degree + 1) {
    throw std::invalid_argument("spline space needs m >= 2p+1 (m=" + std::to_string(last_knot) +
                                ", p=" + std::to_string(degree) + ")");
  }
}

std::vector<double> make_knots(const SplineSpace& space, double t_start, double total_time) {
  space.validate();
  if (!(total_time > 0.0) || !std::isfinite(total_time)) {
    throw std::invalid_argument("spline total time must be positive");
  }
  const int p = space.degree;
  const int m = space.last_knot;
  const int segments = space.num_segments();
  const double delta = total_time / segments;
  std::vector<double> knots(m + 1);
  for (int i = 0; i <= m; ++i) {
    if (i <= p) {
      knots[i] = t_start;
    } else if (i >= m - p) {
      knots[i] = t_start + total_time;
    } else {
      knots[i] = t_start + (i - p) * delta;
    }
  }
  return knots;
}

int find_span(std::span<const double> knots, int degree, int num_control_points, double t) {
  const int n = num_control_points - 1;
  if (t >= knots[n + 1]) return n;
  if (t <= knots[degree]) return degree;
  // Largest s in [p, n] with knots[s] <= t.
  auto first = knots.begin() + degree;
  auto last = knots.begin() + n + 1;
  auto it = std::upper_bound(first, last, t);
  return static_cast<int>(it - knots.begin()) - 1;
}

// Piegl & Tiller, "The NURBS Book", algorithm A2.3.
Eigen::MatrixXd basis_derivatives(std::span<const double> knots, int degree, int span, double t,
                                  int n_ders) {
  const int p = degree;
  Eigen::MatrixXd ndu(p + 1, p + 1);
  std::vector<double> left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - knots[span + 1 - j];
    right[j] = knots[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  Eigen::MatrixXd ders = Eigen::MatrixXd::Zero(n_ders + 1, p + 1);
  for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

  Eigen::MatrixXd a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= n_ders && k <= p; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(k, r) = d;
      std::swap(s1, s2);
    }
  }

  double factor = p;
  for (int k = 1; k <= n_ders && k <= p; ++k) {
    ders.row(k) *= factor;
    factor *= (p - k);
  }
  return ders;
}

Spline::Spline(const SplineSpace& space, double t_start, double total_time,
               Eigen::MatrixXd control_points)
    : space_(space),
      t_start_(t_start),
      total_time_(total_time),
      knots_(make_knots(space, t_start, total_time)),
      control_points_(std::move(control_points)) {
  if (control_points_.rows() != space_.dim ||
      control_points_.cols() != space_.num_control_points()) {
    throw std::invalid_argument("control point matrix has shape " +
                                std::to_string(control_points_.rows()) + "x" +
                                std::to_string(control_points_.cols()) + ", expected " +
                                std::to_string(space_.dim) + "x" +
                                std::to_string(space_.num_control_points()));
  }
}

double Spline::clamp_time(double t) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(t_end()));
  if (!(t >= t_start_ - tol && t <= t_end() + tol)) {
    throw std::out_of_range("spline evaluated at t=" + std::to_string(t) + " outside [" +
                            std::to_string(t_start_) + ", " + std::to_string(t_end()) + "]");
  }
  return std::clamp(t, t_start_, t_end());
}

Eigen::VectorXd Spline::eval(double t, int order) const {
  if (order < 0 || order > space_.degree) {
    throw std::invalid_argument("derivative order " + std::to_string(order) +
                                " exceeds spline degree " + std::to_string(space_.degree));
  }
  t = clamp_time(t);
  const int p = space_.degree;
  const int span = find_span(knots_, p, space_.num_control_points(), t);
  const Eigen::MatrixXd ders = basis_derivatives(knots_, p, span, t, order);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space_.dim);
  for (int j = 0; j <= p; ++j) out += ders(order, j) * control_points_.col(span - p + j);
  return out;
}

Vec3 Spline::eval3(double t, int order) const {
  if (space_.dim != 3) throw std::invalid_argument("eval3 called on a non 3-D spline");
  const int p = space_.degree;
  if (order != 0 || p > 7) return eval(t, order);
  t = clamp_time(t);
  // Uniform interior knots: locate the span arithmetically.
  const int segments = space_.num_segments();
  const int seg = std::clamp(static_cast<int>((t - t_start_) / total_time_ * segments), 0,
                             segments - 1);
  const int span = p + seg;
  std::array<Vec3, 8> d;
  for (int j = 0; j <= p; ++j) d[j] = control_points_.col(span - p + j);
  for (int r = 1; r <= p; ++r) {
    for (int j = p; j >= r; --j) {
      const double lo = knots_[j + span - p];
      const double hi = knots_[j + 1 + span - r];
      const double alpha = (t - lo) / (hi - lo);
      d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
    }
  }
  return d[p];
}

Eigen::VectorXd Spline::eval_on_segment(int segment, double t, int order) const {
  if (segment < 0 || segment >= space_.num_segments()) {
    throw std::out_of_range("segment index out of range");
  }
  if (order < 0 || order > space_.degree) {
    throw std::invalid_argument("derivative order exceeds spline degree");
  }
  t = clamp_time(t);
  const int p = space_.degree;
  const int span = p + segment;
  const Eigen::MatrixXd ders = basis_derivatives(knots_, p, span, t, order);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space_.dim);
  for (int j = 0; j <= p; ++j) out += ders(order, j) * control_points_.col(span - p + j);
  return out;
}

Spline Spline::derivative() const {
  const int p = space_.degree;
  if (p < 1) throw std::invalid_argument("cannot differentiate a degree-0 spline");
  const int n_cps = space_.num_control_points();
  Eigen::MatrixXd cps(space_.dim, n_cps - 1);
  for (int l = 0; l < n_cps - 1; ++l) {
    const double denom = knots_[l + p + 1] - knots_[l + 1];
    cps.col(l) = p * (control_points_.col(l + 1) - control_points_.col(l)) / denom;
  }
  const SplineSpace sub{p - 1, space_.last_knot - 2, space_.dim};
  return Spline(sub, t_start_, total_time_, std::move(cps));
}

Spline Spline::with_control_points(Eigen::MatrixXd control_points) const {
  return Spline(space_, t_start_, total_time_, std::move(control_points));
}

namespace {

Eigen::MatrixXd collocation_matrix(const SplineSpace& space, std::span<const double> knots,
                                   std::span<const double> times, int order) {
  const int n_cps = space.num_control_points();
  const int p = space.degree;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(times.size()), n_cps);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const int span = find_span(knots, p, n_cps, times[i]);
    const Eigen::MatrixXd ders = basis_derivatives(knots, p, span, times[i], order);
    for (int j = 0; j <= p; ++j) B(static_cast<Eigen::Index>(i), span - p + j) = ders(order, j);
  }
  return B;
}

}  // namespace

Spline fit(const SplineSpace& space, std::span<const double> times, const Eigen::MatrixXd& values) {
  space.validate();
  const int n_cps = space.num_control_points();
  if (values.rows() != space.dim || values.cols() != static_cast<Eigen::Index>(times.size())) {
    throw std::invalid_argument("fit: values must be dim x number-of-samples");
  }
  if (static_cast<int>(times.size()) < n_cps) {
    throw std::invalid_argument("fit: " + std::to_string(times.size()) + " samples for " +
                                std::to_string(n_cps) + " control points");
  }
  const auto [lo, hi] = std::minmax_element(times.begin(), times.end());
  const double t_start = *lo;
  const double total_time = *hi - *lo;
  const std::vector<double> knots = make_knots(space, t_start, total_time);

  const Eigen::MatrixXd B = collocation_matrix(space, knots, times, 0);
  Eigen::MatrixXd normal = B.transpose() * B;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(normal, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || lmin < 1e-10 * lmax) {
    throw std::domain_error("fit: rank-deficient normal equations (too few distinct samples)");
  }
  normal.diagonal().array() += 1e-12;
  Eigen::MatrixXd rhs = B.transpose() * values.transpose();
  Eigen::MatrixXd cps = normal.ldlt().solve(rhs).transpose();
  return Spline(space, t_start, total_time, std::move(cps));
}

SampledBasis::SampledBasis(const SplineSpace& space, std::vector<double> fractions, int max_order)
    : space_(space), fractions_(std::move(fractions)) {
  if (max_order < 0 || max_order > space.degree) {
    throw std::invalid_argument("SampledBasis: max_order out of range");
  }
  const std::vector<double> knots = make_knots(space, 0.0, 1.0);
  for (double u : fractions_) {
    if (u < 0.0 || u > 1.0) throw std::invalid_argument("SampledBasis: fraction outside [0, 1]");
  }
  matrices_.reserve(max_order + 1);
  for (int k = 0; k <= max_order; ++k) {
    matrices_.push_back(collocation_matrix(space, knots, fractions_, k));
  }
}

Eigen::MatrixXd SampledBasis::evaluate(const Eigen::MatrixXd& control_points, double total_time,
                                       int order) const {
  return control_points * matrix(order).transpose() / std::pow(total_time, order);
}

ActionTuple::Vector ActionTuple::flatten() const {
  Vector v;
  for (int k = 0; k < 4; ++k) v.segment<3>(3 * k) = qhat[k];
  v(12) = total_time;
  return v;
}

ActionTuple ActionTuple::unflatten(const Vector& v) {
  ActionTuple a;
  for (int k = 0; k < 4; ++k) a.qhat[k] = v.segment<3>(3 * k);
  a.total_time = v(12);
  return a;
}

Spline impose_boundary_conditions(const ActionTuple& action, const Vec3& start, const Vec3& v_in,
                                  const Vec3& a_in, double t_start) {
  const double T = action.total_time;
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw std::invalid_argument("impose_boundary_conditions: total time must be positive");
  }
  constexpr SplineSpace space = SplineSpace::uav_position();
  const double delta = T / space.num_segments();
  Eigen::Matrix<double, 3, 9> q;
  q.col(0) = start;
  q.col(1) = start + (delta / 3.0) * v_in;
  q.col(2) = q.col(1) + (2.0 * delta / 3.0) * (v_in + 0.5 * delta * a_in);
  for (int k = 0; k < 4; ++k) q.col(3 + k) = action.qhat[k];
  q.col(7) = q.col(6);
  q.col(8) = q.col(6);
  return Spline(space, t_start, T, q);
}

}  // namespace dpanther
