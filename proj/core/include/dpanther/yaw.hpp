#pragma once

#include <vector>

#include "dpanther/frames.hpp"
#include "dpanther/splines.hpp"

namespace dpanther {

/// Body x-axis that keeps the obstacle best centred in a camera looking along b1,
/// subject to b1 being a unit vector perpendicular to the thrust direction xi:
///   b1 = normalize(r - (r.xi / |xi|^2) xi),   r = p_obst - p.
/// When r is parallel to xi every admissible b1 is equally good; `fallback`
/// (projected onto the plane orthogonal to xi) is returned instead.
Vec3 b1_closed_form(const Vec3& r, const Vec3& xi, const Vec3& fallback = Vec3::UnitX());

/// Yaw samples along a position trajectory and the spline fitted to them.
struct PsiTrajectory {
  Spline spline;               // S^1_{3,12} over the position spline's interval
  std::vector<double> times;   // sample times
  std::vector<double> psi;     // unwrapped samples
  double fit_rms = 0.0;
};

inline constexpr int kDefaultYawSamples = 64;

/// Unwraps consecutive angles so that neighbouring differences lie in (-pi, pi].
void unwrap_angles(std::vector<double>& angles);

/// Closed-form yaw along `pos` looking at `obst`, fitted into S^1_{3,12}.
/// `obst` must cover the time interval of `pos`.
PsiTrajectory psi_profile(const Spline& pos, const Spline& obst,
                          int n_samples = kDefaultYawSamples);

/// Constant-yaw trajectory over [t_start, t_start + total_time].
PsiTrajectory constant_psi(double psi, double t_start, double total_time);

}  // namespace dpanther
