#include "dpanther/expert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dpanther {

void ExpertConfig::validate() const {
  if (n_runs < 1) throw std::invalid_argument("n_runs must be >= 1");
  if (n_s < 1) throw std::invalid_argument("n_s must be >= 1");
  if (!(t_pred > 0.0)) throw std::invalid_argument("t_pred must be positive");
  if (!(t_min > 0.0 && t_min < t_pred)) throw std::invalid_argument("t_min must lie in (0, t_pred)");
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be positive");
}

Vec3 yaw_invariant_rho(const Vec3& rho) {
  const double h = std::hypot(rho.x(), rho.y());
  return {h, h, rho.z()};
}

BoxPair expert_boxes(const Observation& obs, const ExpertConfig& cfg) {
  // A box with the yaw-invariant half-extents, expressed as a pair with the UAV box.
  const Vec3 rho = yaw_invariant_rho(BoxPair{obs.s_obst, cfg.s_uav}.rho());
  return {2.0 * rho - cfg.s_uav, cfg.s_uav};
}

PlanningProblem make_problem(const Observation& obs, const ExpertConfig& cfg) {
  PlanningProblem problem{obs.v, obs.a, obs.g, obs.obstacle_spline(cfg.t_pred),
                          expert_boxes(obs, cfg).rho() + Vec3::Constant(cfg.collision_margin)};
  return problem;
}

namespace {

struct Basis {
  Vec3 forward;
  Vec3 left;
  Vec3 up;
};

Basis goal_basis(const Vec3& g) {
  Basis b;
  b.forward = g.norm() > 1e-6 ? Vec3(g.normalized()) : Vec3::UnitX();
  Vec3 left = Vec3::UnitZ().cross(b.forward);
  if (left.norm() < 1e-6) left = Vec3::UnitY();
  b.left = left.normalized();
  b.up = b.forward.cross(b.left).normalized();
  return b;
}

}  // namespace

std::vector<ActionTuple> initial_guesses(const Observation& obs, int n_runs,
                                         const ExpertConfig& cfg) {
  if (n_runs < 1) throw std::invalid_argument("initial_guesses: n_runs must be >= 1");
  const Basis basis = goal_basis(obs.g);
  const double rho = expert_boxes(obs, cfg).rho().maxCoeff();
  const double t_seed = std::clamp(obs.g.norm() / cfg.v_nominal + cfg.time_slack, cfg.t_min,
                                   cfg.t_pred);

  ActionTuple straight;
  for (int k = 0; k < 4; ++k) straight.qhat[k] = obs.g * (k + 1) / 4.0;
  straight.total_time = t_seed;

  const std::array<Vec3, 8> directions = {
      basis.up,
      -basis.up,
      basis.left,
      -basis.left,
      (basis.up + basis.left).normalized(),
      (basis.up - basis.left).normalized(),
      (-basis.up + basis.left).normalized(),
      (-basis.up - basis.left).normalized(),
  };
  constexpr std::array<double, 2> magnitudes = {1.5, 2.5};

  std::vector<ActionTuple> seeds;
  seeds.reserve(n_runs);
  seeds.push_back(straight);
  for (int j = 0; static_cast<int>(seeds.size()) < n_runs; ++j) {
    const Vec3& dir = directions[j % directions.size()];
    const double k = magnitudes[(j / directions.size()) % magnitudes.size()];
    const int cycle = j / static_cast<int>(directions.size() * magnitudes.size());
    ActionTuple seed = straight;
    for (int m = 0; m < 3; ++m) seed.qhat[m] += k * rho * dir;
    seed.total_time = std::min(cfg.t_pred, t_seed * (1.0 + 0.1 * cycle));
    seeds.push_back(seed);
  }
  return seeds;
}

namespace {

double penalized(const PlanEvaluation& e, const ExpertConfig& cfg) {
  return e.augmented + cfg.mu_coll * e.penetration;
}

ActionTuple::Vector project(ActionTuple::Vector x, const ExpertConfig& cfg) {
  x(12) = std::clamp(x(12), cfg.t_min, cfg.t_pred);
  return x;
}

}  // namespace

SingleRunResult optimize_single(const ActionTuple& seed, const Observation& obs,
                                const ExpertConfig& cfg, const PlanEvaluator& evaluator) {
  if (!(seed.total_time > 0.0 && seed.total_time <= cfg.t_pred)) {
    throw std::invalid_argument("optimize_single: seed time outside (0, t_pred]");
  }
  const PlanningProblem problem = make_problem(obs, cfg);
  auto objective = [&](const ActionTuple::Vector& x) {
    try {
      return penalized(evaluator.evaluate(problem, ActionTuple::unflatten(x)), cfg);
    } catch (const std::domain_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  ActionTuple::Vector x = project(seed.flatten(), cfg);
  double fx = objective(x);
  if (!std::isfinite(fx)) throw std::domain_error("optimize_single: non-finite cost at seed");

  SingleRunResult result;
  result.trace.push_back(fx);

  auto gradient = [&](const ActionTuple::Vector& at, double f_at) {
    ActionTuple::Vector g;
    for (int i = 0; i < ActionTuple::kSize; ++i) {
      double h = cfg.fd_step * std::max(1.0, std::abs(at(i)));
      if (i == 12 && at(i) + h > cfg.t_pred) h = -h;
      ActionTuple::Vector xh = at;
      xh(i) += h;
      g(i) = (objective(xh) - f_at) / h;
    }
    return g;
  };

  // Descent directions come from a BFGS inverse-Hessian estimate; every step
  // is accepted only under the Armijo condition, so the trace is monotone.
  using Matrix13 = Eigen::Matrix<double, ActionTuple::kSize, ActionTuple::kSize>;
  Matrix13 h_inv = Matrix13::Identity();
  ActionTuple::Vector grad = gradient(x, fx);
  bool scaled = false;
  int stalled = 0;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    const double gnorm = grad.norm();
    if (!std::isfinite(gnorm) || gnorm < 1e-9) break;
    ActionTuple::Vector dir = -h_inv * grad;
    if (!(grad.dot(dir) < 0.0)) {
      h_inv.setIdentity();
      scaled = false;
      dir = -grad;
    }
    double alpha = scaled ? 1.0 : std::min(1.0, 0.5 / gnorm);

    bool accepted = false;
    ActionTuple::Vector x_new;
    double f_new = fx;
    for (int halving = 0; halving < 40; ++halving) {
      x_new = project(x + alpha * dir, cfg);
      f_new = objective(x_new);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * grad.dot(x_new - x)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    const ActionTuple::Vector grad_new = gradient(x_new, f_new);
    const ActionTuple::Vector s = x_new - x;
    const ActionTuple::Vector y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h_inv = Matrix13::Identity() * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix13 v = Matrix13::Identity() - rho * s * y.transpose();
      h_inv = v * h_inv * v.transpose() + rho * s * s.transpose();
    }

    const double improvement = fx - f_new;
    x = x_new;
    fx = f_new;
    grad = grad_new;
    result.trace.push_back(fx);
    stalled = improvement < 1e-7 * (1.0 + std::abs(fx)) ? stalled + 1 : 0;
    if (stalled >= 3) {
      ++it;
      break;
    }
  }

  result.iterations = it;
  result.action = ActionTuple::unflatten(x);
  const PlanEvaluation final_eval = evaluator.evaluate(problem, result.action);
  result.cost = final_eval.augmented;
  result.penetration = final_eval.penetration;
  result.penalized_cost = penalized(final_eval, cfg);
  const Spline pos = impose_boundary_conditions(result.action, Vec3::Zero(), obs.v, obs.a);
  result.feasible = std::isfinite(result.cost) &&
                    collision_free(pos, problem.obstacle, expert_boxes(obs, cfg));
  return result;
}

double control_point_rms(const ActionTuple& a, const ActionTuple& b) {
  double sq = 0.0;
  for (int k = 0; k < 4; ++k) sq += (a.qhat[k] - b.qhat[k]).squaredNorm();
  return std::sqrt(sq / 4.0);
}

std::vector<ExpertSolution> expert_plan(const Observation& obs, const ExpertConfig& cfg,
                                        const PlanEvaluator& evaluator) {
  cfg.validate();
  const std::vector<ActionTuple> seeds = initial_guesses(obs, cfg.n_runs, cfg);
  std::vector<ExpertSolution> candidates;
  for (int i = 0; i < static_cast<int>(seeds.size()); ++i) {
    SingleRunResult run;
    try {
      run = optimize_single(seeds[i], obs, cfg, evaluator);
    } catch (const std::domain_error&) {
      continue;  // the seed itself sits on a singular attitude
    }
    if (run.feasible) candidates.push_back({run.action, run.cost, i});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const ExpertSolution& a, const ExpertSolution& b) {
                     if (a.cost != b.cost) return a.cost < b.cost;
                     return a.seed_index < b.seed_index;
                   });
  std::vector<ExpertSolution> distinct;
  for (const auto& c : candidates) {
    const bool duplicate = std::any_of(distinct.begin(), distinct.end(), [&](const auto& d) {
      return control_point_rms(c.action, d.action) < cfg.dedupe_threshold;
    });
    if (!duplicate) distinct.push_back(c);
  }
  if (static_cast<int>(distinct.size()) > cfg.n_s) distinct.resize(cfg.n_s);
  return distinct;
}

}  // namespace dpanther
