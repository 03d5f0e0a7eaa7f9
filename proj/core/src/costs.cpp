#include "dpanther/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dpanther/frames.hpp"

namespace dpanther {

void CostWeights::validate() const {
  if (jerk < 0 || yaw < 0 || fov < 0 || goal < 0 || time < 0) {
    throw std::invalid_argument("cost weights must be nonnegative");
  }
  if (!(lambda > 0)) throw std::invalid_argument("lambda must be positive");
  if (!(fov_angle > 0 && fov_angle < std::numbers::pi)) {
    throw std::invalid_argument("FOV angle must lie in (0, pi)");
  }
  if (!(fov_sharpness > 0)) throw std::invalid_argument("FOV sharpness must be positive");
}

void DynamicLimits::validate() const {
  if ((v_max.array() <= 0).any() || (a_max.array() <= 0).any() || (j_max.array() <= 0).any() ||
      !(psi_dot_max > 0)) {
    throw std::invalid_argument("dynamic limits must be strictly positive");
  }
}

void BoxPair::validate() const {
  if ((s_obst.array() <= 0).any() || (s_uav.array() <= 0).any()) {
    throw std::invalid_argument("box sizes must be strictly positive");
  }
}

double in_fov(const Vec3& p, const Vec3& b1, const Vec3& p_obst, double theta, double gamma) {
  const Vec3 r = p_obst - p;
  const double n = r.norm();
  if (!(n > 0.0)) throw std::invalid_argument("in_fov: UAV and obstacle coincide");
  const double x = gamma * (b1.dot(r) / n - std::cos(theta / 2.0));
  return 1.0 / (1.0 + std::exp(-x));
}

QuadratureRule QuadratureRule::knot_aligned(int num_segments, int intervals_per_segment) {
  if (num_segments < 1 || intervals_per_segment < 2 || intervals_per_segment % 2 != 0) {
    throw std::invalid_argument("quadrature needs >= 1 segment and an even interval count");
  }
  QuadratureRule rule;
  const double seg_len = 1.0 / num_segments;
  const double h = seg_len / intervals_per_segment;
  for (int s = 0; s < num_segments; ++s) {
    for (int k = 0; k <= intervals_per_segment; ++k) {
      rule.segment.push_back(s);
      rule.fraction.push_back(std::min(1.0, s * seg_len + k * h));
      const double c = (k == 0 || k == intervals_per_segment) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      rule.weight.push_back(c * h / 3.0);
    }
  }
  return rule;
}

namespace {

void require_shared_interval(const Spline& pos, const Spline& other, const char* what) {
  const double tol = 1e-9 * std::max(1.0, std::abs(pos.t_end()));
  if (other.t_start() > pos.t_start() + tol || other.t_end() < pos.t_end() - tol) {
    throw std::invalid_argument(std::string(what) + " does not cover the trajectory interval");
  }
}

}  // namespace

CostBreakdown c_obj(const Spline& pos, const PsiTrajectory& psi, const Spline& obst, const Vec3& goal,
                    const CostWeights& w) {
  require_shared_interval(pos, obst, "obstacle spline");
  require_shared_interval(pos, psi.spline, "yaw spline");
  const double T = pos.total_time();
  const double t0 = pos.t_start();
  const QuadratureRule rule =
      QuadratureRule::knot_aligned(pos.space().num_segments(), kQuadratureIntervalsPerSegment);

  double jerk_int = 0.0;
  double yaw_int = 0.0;
  double fov_int = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    const double t = t0 + rule.fraction[i] * T;
    const double wq = rule.weight[i] * T;
    const int seg = rule.segment[i];
    const Vec3 jerk = pos.eval_on_segment(seg, t, 3);
    const Vec3 p = pos.eval_on_segment(seg, t, 0);
    const Vec3 a = pos.eval_on_segment(seg, t, 2);
    const double psi_val = psi.spline.eval_on_segment(seg, t, 0)(0);
    const double psi_dd = psi.spline.eval_on_segment(seg, t, 2)(0);
    const Vec3 b1 = rotation_from_xi_psi(xi_from_acceleration(a), psi_val).col(0);
    const double f = in_fov(p, b1, obst.eval3(t), w.fov_angle, w.fov_sharpness);
    jerk_int += wq * jerk.squaredNorm();
    yaw_int += wq * psi_dd * psi_dd;
    fov_int += wq * f * f * f;
  }

  CostBreakdown out;
  out.jerk = w.jerk * jerk_int;
  out.yaw = w.yaw * yaw_int;
  out.fov = -w.fov * fov_int;
  out.goal = w.goal * (pos.eval3(pos.t_end()) - goal).squaredNorm();
  out.time = w.time * T;
  return out;
}

namespace {

double excess_sq(const Eigen::MatrixXd& cps, const Eigen::VectorXd& limit) {
  double sum = 0.0;
  for (Eigen::Index c = 0; c < cps.cols(); ++c) {
    for (Eigen::Index r = 0; r < cps.rows(); ++r) {
      const double e = std::abs(cps(r, c)) - limit(r);
      if (e > 0) sum += e * e;
    }
  }
  return sum;
}

}  // namespace

double c_dyn_lim(const Spline& pos, const PsiTrajectory& psi, const DynamicLimits& lim) {
  const Spline vel = pos.derivative();
  const Spline acc = vel.derivative();
  const Spline jerk = acc.derivative();
  const Spline psi_dot = psi.spline.derivative();
  return excess_sq(vel.control_points(), lim.v_max) + excess_sq(acc.control_points(), lim.a_max) +
         excess_sq(jerk.control_points(), lim.j_max) +
         excess_sq(psi_dot.control_points(), Eigen::VectorXd::Constant(1, lim.psi_dot_max));
}

double augmented_cost(const Spline& pos, const PsiTrajectory& psi, const Spline& obst,
                      const Vec3& goal, const CostWeights& w, const DynamicLimits& lim) {
  return c_obj(pos, psi, obst, goal, w).total() + w.lambda * c_dyn_lim(pos, psi, lim);
}

double penetration_depth(const Vec3& offset, const Vec3& rho) {
  const Vec3 gap = rho - offset.cwiseAbs();
  const double depth = gap.minCoeff();
  return depth > 0.0 ? depth : 0.0;
}

bool collision_free(const Spline& pos, const Spline& obst, const BoxPair& boxes, int n_check) {
  if (n_check < 2) throw std::invalid_argument("collision_free needs n_check >= 2");
  require_shared_interval(pos, obst, "obstacle spline");
  const Vec3 rho = boxes.rho();
  for (int i = 0; i < n_check; ++i) {
    const double t = pos.t_start() + pos.total_time() * static_cast<double>(i) / (n_check - 1);
    const Vec3 offset = (pos.eval3(t) - obst.eval3(t)).cwiseAbs();
    if ((offset.array() < rho.array()).all()) return false;
  }
  return true;
}

ObstacleTrack ObstacleTrack::from_spline(Spline spline, const BoxPair& boxes) {
  return {[s = std::move(spline)](double t) {
            return s.eval3(std::clamp(t, s.t_start(), s.t_end()));
          },
          boxes};
}

namespace {

template <typename AxisReduce>
double ratio_over_log(std::span<const TimedPoint> log, std::span<const ObstacleTrack> obstacles,
                      AxisReduce reduce) {
  if (log.empty()) throw std::invalid_argument("safety ratio of an empty log");
  if (obstacles.empty()) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& obs : obstacles) {
    const Vec3 rho = obs.boxes.rho();
    for (const auto& sample : log) {
      const Vec3 ratio = (sample.p - obs.position(sample.t)).cwiseAbs().cwiseQuotient(rho);
      best = std::min(best, reduce(ratio));
    }
  }
  return best;
}

}  // namespace

double safety_ratio(std::span<const TimedPoint> log, std::span<const ObstacleTrack> obstacles) {
  return ratio_over_log(log, obstacles, [](const Vec3& r) { return r.minCoeff(); });
}

double separating_axis_ratio(std::span<const TimedPoint> log,
                             std::span<const ObstacleTrack> obstacles) {
  return ratio_over_log(log, obstacles, [](const Vec3& r) { return r.maxCoeff(); });
}

}  // namespace dpanther
