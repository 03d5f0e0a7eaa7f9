#include "dpanther/yaw.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dpanther {

namespace {

Vec3 any_perpendicular(const Vec3& xi_unit) {
  const Vec3 candidate = std::abs(xi_unit.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return (candidate - candidate.dot(xi_unit) * xi_unit).normalized();
}

}  // namespace

Vec3 b1_closed_form(const Vec3& r, const Vec3& xi, const Vec3& fallback) {
  const double xi_sq = xi.squaredNorm();
  if (!(xi_sq > 0.0)) throw std::domain_error("b1_closed_form: xi must be nonzero");
  const Vec3 xi_unit = xi / std::sqrt(xi_sq);

  const Vec3 r_perp = r - (r.dot(xi) / xi_sq) * xi;
  const double scale = std::max(r.norm(), 1e-300);
  if (r_perp.norm() > 1e-9 * scale) return r_perp.normalized();

  const Vec3 f_perp = fallback - fallback.dot(xi_unit) * xi_unit;
  if (f_perp.norm() > 1e-9 * std::max(fallback.norm(), 1e-300)) return f_perp.normalized();
  return any_perpendicular(xi_unit);
}

void unwrap_angles(std::vector<double>& angles) {
  for (std::size_t i = 1; i < angles.size(); ++i) {
    angles[i] = angles[i - 1] + wrap_angle(angles[i] - angles[i - 1]);
  }
}

PsiTrajectory psi_profile(const Spline& pos, const Spline& obst, int n_samples) {
  if (n_samples < SplineSpace::yaw().num_control_points() + 4) {
    throw std::invalid_argument("psi_profile needs at least 13 samples");
  }
  if (pos.dim() != 3 || obst.dim() != 3) throw std::invalid_argument("psi_profile: 3-D splines");

  const double t0 = pos.t_start();
  const double T = pos.total_time();
  std::vector<double> times(n_samples);
  std::vector<double> psi(n_samples);
  Vec3 previous_b1 = Vec3::UnitX();
  for (int i = 0; i < n_samples; ++i) {
    const double t = t0 + T * static_cast<double>(i) / (n_samples - 1);
    times[i] = t;
    const Vec3 xi = xi_from_acceleration(pos.eval3(t, 2));
    const Vec3 r = obst.eval3(t) - pos.eval3(t);
    const Vec3 b1 = b1_closed_form(r, xi, previous_b1);
    psi[i] = psi_from_b1(xi, b1);
    previous_b1 = b1;
  }
  unwrap_angles(psi);

  Eigen::MatrixXd values = Eigen::Map<const Eigen::RowVectorXd>(psi.data(), n_samples);
  Spline spline = fit(SplineSpace::yaw(), times, values);
  double sq = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double e = spline.eval(times[i])(0) - psi[i];
    sq += e * e;
  }
  return {std::move(spline), std::move(times), std::move(psi), std::sqrt(sq / n_samples)};
}

PsiTrajectory constant_psi(double psi, double t_start, double total_time) {
  constexpr SplineSpace space = SplineSpace::yaw();
  Eigen::MatrixXd cps = Eigen::MatrixXd::Constant(1, space.num_control_points(), psi);
  return {Spline(space, t_start, total_time, std::move(cps)), {t_start}, {psi}, 0.0};
}

}  // namespace dpanther
