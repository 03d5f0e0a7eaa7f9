#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dpanther/sim.hpp"

namespace dpanther {

std::string_view to_string(ObstacleKind kind) {
  switch (kind) {
    case ObstacleKind::kStatic: return "static";
    case ObstacleKind::kTrefoil: return "trefoil";
    case ObstacleKind::kSquare: return "square";
    case ObstacleKind::kEight: return "eight";
    case ObstacleKind::kEpitrochoid: return "epitrochoid";
  }
  throw std::invalid_argument("unknown obstacle kind");
}

ObstacleKind parse_obstacle_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto k : {ObstacleKind::kStatic, ObstacleKind::kTrefoil, ObstacleKind::kSquare,
                 ObstacleKind::kEight, ObstacleKind::kEpitrochoid}) {
    if (to_string(k) == lower) return k;
  }
  throw std::invalid_argument("unknown obstacle kind '" + std::string(name) + "'");
}

void ObstacleSpec::validate() const {
  if (!(period > 0.0)) throw std::invalid_argument("obstacle period must be positive");
  if (!(s_obst.array() > 0.0).all()) throw std::invalid_argument("obstacle size must be positive");
  if (!offset.allFinite() || !scale.allFinite() || !std::isfinite(phase)) {
    throw std::invalid_argument("obstacle parameters must be finite");
  }
}

namespace {

// Unit-size closed curves; tau is the curve angle.
Vec3 trefoil(double tau) {
  return Vec3(std::sin(tau) + 2.0 * std::sin(2.0 * tau), std::cos(tau) - 2.0 * std::cos(2.0 * tau),
              -std::sin(3.0 * tau)) /
         3.0;
}

// Lemniscate of Gerono.
Vec3 eight(double tau) { return {std::sin(tau), std::sin(tau) * std::cos(tau), 0.0}; }

// Rolling radius 1, fixed radius R = 2, pen distance 1.5, scaled into the unit disc.
Vec3 epitrochoid(double tau) {
  constexpr double R = 2.0, r = 1.0, d = 1.5;
  const double k = (R + r) / r;
  return Vec3((R + r) * std::cos(tau) - d * std::cos(k * tau),
              (R + r) * std::sin(tau) - d * std::sin(k * tau), 0.0) /
         (R + r + d);
}

// Square with corners (+-1, +-1, 0) traversed at constant speed.
Vec3 square(double tau) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double s = std::fmod(tau / two_pi, 1.0);
  if (s < 0.0) s += 1.0;
  const double u = 8.0 * s;  // arc length along the perimeter of length 8
  if (u < 2.0) return {1.0, -1.0 + u, 0.0};
  if (u < 4.0) return {1.0 - (u - 2.0), 1.0, 0.0};
  if (u < 6.0) return {-1.0, 1.0 - (u - 4.0), 0.0};
  return {-1.0 + (u - 6.0), -1.0, 0.0};
}

}  // namespace

Vec3 obstacle_position(const ObstacleSpec& spec, double t) {
  const double tau = 2.0 * std::numbers::pi * t / spec.period + spec.phase;
  Vec3 unit = Vec3::Zero();
  switch (spec.kind) {
    case ObstacleKind::kStatic: return spec.offset;
    case ObstacleKind::kTrefoil: unit = trefoil(tau); break;
    case ObstacleKind::kSquare: unit = square(tau); break;
    case ObstacleKind::kEight: unit = eight(tau); break;
    case ObstacleKind::kEpitrochoid: unit = epitrochoid(tau); break;
  }
  return spec.offset + spec.scale.cwiseProduct(unit);
}

Spline obstacle_spline(const ObstacleSpec& spec, double t0, double horizon, int samples) {
  if (!(horizon > 0.0)) throw std::invalid_argument("obstacle_spline: horizon must be positive");
  if (samples < 2) throw std::invalid_argument("obstacle_spline: need at least two samples");
  std::vector<double> times(samples);
  Eigen::MatrixXd values(3, samples);
  for (int i = 0; i < samples; ++i) {
    times[i] = t0 + horizon * i / (samples - 1);
    values.col(i) = obstacle_position(spec, times[i]);
  }
  return fit(SplineSpace::obstacle(), times, values);
}

Vec3 project_goal(const Vec3& g_term, const Vec3& d, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("project_goal: radius must be positive");
  const Vec3 diff = g_term - d;
  const double dist = diff.norm();
  if (dist <= r) return g_term;
  return d + r * diff / dist;
}

}  // namespace dpanther
