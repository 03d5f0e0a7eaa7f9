#include "dpanther/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace dpanther {

void MissionConfig::validate() const {
  if (goals.empty()) throw std::invalid_argument("mission needs at least one goal");
  if (!(sphere_radius > 0.0)) throw std::invalid_argument("sphere radius must be positive");
  if (!(replan_period > 0.0)) throw std::invalid_argument("replan period must be positive");
  if (!(tick > 0.0) || tick > replan_period) {
    throw std::invalid_argument("tick must be positive and no longer than the replan period");
  }
  if (!(goal_tolerance > 0.0)) throw std::invalid_argument("goal tolerance must be positive");
  if (stop_after_goals < 0) throw std::invalid_argument("stop_after_goals must be >= 0");
  weights.validate();
  limits.validate();
  expert.validate();
}

Commitment Commitment::hover(const Vec3& p, double psi, double t) {
  Commitment c;
  const Eigen::MatrixXd cps = p.replicate(1, SplineSpace::uav_position().num_control_points());
  c.pieces_.push_back({t, Spline(SplineSpace::uav_position(), t, 1.0, cps), constant_psi(psi, t, 1.0)});
  return c;
}

const Commitment::Piece& Commitment::active(double t) const {
  if (pieces_.empty()) throw std::logic_error("commitment has no trajectory");
  for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it) {
    if (it->t_start <= t) return *it;
  }
  return pieces_.front();
}

UAVState Commitment::state(double t) const {
  const Piece& piece = active(t);
  const double tc = std::clamp(t, piece.pos.t_start(), piece.pos.t_end());
  UAVState s;
  s.p = piece.pos.eval3(tc);
  s.psi = piece.psi.spline.eval(tc)(0);
  if (t < piece.pos.t_end()) {
    s.v = piece.pos.eval(tc, 1);
    s.a = piece.pos.eval(tc, 2);
    s.psi_dot = piece.psi.spline.eval(tc, 1)(0);
  }
  return s;
}

const Spline& Commitment::position_at(double t) const { return active(t).pos; }

void Commitment::splice(double t_start, Spline pos, PsiTrajectory psi) {
  if (!pieces_.empty() && t_start < pieces_.back().t_start) {
    throw std::invalid_argument("splice must not start before the latest piece");
  }
  pieces_.push_back({t_start, std::move(pos), std::move(psi)});
}

void Commitment::prune(double t) {
  // Keep the active piece and everything after it.
  std::size_t first = 0;
  for (std::size_t k = 0; k < pieces_.size(); ++k) {
    if (pieces_[k].t_start <= t) first = k;
  }
  pieces_.erase(pieces_.begin(), pieces_.begin() + static_cast<std::ptrdiff_t>(first));
}

int select_obstacle(std::span<const ObstacleSpec> obstacles, const Commitment& committed, double t0,
                    const MissionConfig& cfg) {
  if (obstacles.empty()) throw std::invalid_argument("select_obstacle: no obstacles");
  constexpr int kSamples = 30;
  int best = 0;
  double best_distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(obstacles.size()); ++i) {
    const Vec3 rho = BoxPair{obstacles[i].s_obst, cfg.expert.s_uav}.rho();
    double distance = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kSamples; ++k) {
      const double t = t0 + cfg.expert.t_pred * k / (kSamples - 1);
      const Vec3 kappa = committed.state(t).p - obstacle_position(obstacles[i], t);
      distance = std::min(distance, kappa.cwiseAbs().cwiseQuotient(rho).maxCoeff());
    }
    if (distance < best_distance) {
      best_distance = distance;
      best = i;
    }
  }
  return best;
}

Observation build_observation(const UAVState& d, const Spline& obstacle_world, const Vec3& s_obst,
                              const Vec3& g_term, const MissionConfig& cfg) {
  if (obstacle_world.space() != SplineSpace::obstacle()) {
    throw std::invalid_argument("build_observation: obstacle must be in S^3_{3,13}");
  }
  Observation obs;
  obs.v = world_to_f(d, d.v, VectorKind::kFree);
  obs.a = world_to_f(d, d.a, VectorKind::kFree);
  obs.g = world_to_f(d, project_goal(g_term, d.p, cfg.sphere_radius), VectorKind::kPoint);
  obs.psi_dot = d.psi_dot;
  const Eigen::Matrix3Xd cps =
      world_to_f(d, Eigen::Matrix3Xd(obstacle_world.control_points()), VectorKind::kPoint);
  for (int k = 0; k < Observation::kObstacleControlPoints; ++k) obs.obst_cps[k] = cps.col(k);
  obs.s_obst = s_obst;
  return obs;
}

Observation build_observation(const UAVState& d, double t_d, const ObstacleSpec& obstacle,
                              const Vec3& g_term, const MissionConfig& cfg) {
  return build_observation(d, obstacle_spline(obstacle, t_d, cfg.expert.t_pred), obstacle.s_obst,
                           g_term, cfg);
}

Planner expert_planner(const ExpertConfig& cfg, std::shared_ptr<const PlanEvaluator> evaluator) {
  return {"expert", [cfg, evaluator](const Observation& obs) {
            PlannerOutput out;
            for (const auto& s : expert_plan(obs, cfg, *evaluator)) {
              out.actions.push_back(s.action);
              out.costs.push_back(s.cost);
            }
            return out;
          }};
}

Planner student_planner(std::shared_ptr<const Policy> policy) {
  return {"student", [policy](const Observation& obs) {
            return PlannerOutput{predict(*policy, obs), {}};
          }};
}

namespace {

// Stand-in obstacle for worlds without any: far above the start and static.
ObstacleSpec distant_obstacle(const Vec3& p) {
  ObstacleSpec spec;
  spec.offset = p + Vec3(0.0, 0.0, 100.0);
  return spec;
}

}  // namespace

ReplanRecord replan_step(const Planner& planner, Commitment& commitment, double t_now,
                         const Vec3& g_term, std::span<const ObstacleSpec> obstacles,
                         const MissionConfig& cfg) {
  ReplanRecord rec;
  rec.time = t_now;
  rec.t_d = t_now + cfg.replan_period;
  const UAVState d = commitment.state(rec.t_d);
  const double horizon = cfg.expert.t_pred;

  std::vector<ObstacleSpec> world(obstacles.begin(), obstacles.end());
  if (world.empty()) world.push_back(distant_obstacle(d.p));
  std::vector<Spline> predictions;
  for (const auto& spec : world) predictions.push_back(obstacle_spline(spec, rec.t_d, horizon));
  rec.obstacle_index = select_obstacle(world, commitment, rec.t_d, cfg);
  const ObstacleSpec& target = world[rec.obstacle_index];
  rec.observation = build_observation(d, predictions[rec.obstacle_index], target.s_obst, g_term, cfg);

  const auto start = std::chrono::steady_clock::now();
  rec.planner = planner.plan(rec.observation);
  rec.planner_latency_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const Vec3 g_world = project_goal(g_term, d.p, cfg.sphere_radius);
  rec.n_candidates = static_cast<int>(rec.planner.actions.size());
  double best_cost = std::numeric_limits<double>::infinity();
  std::optional<std::pair<Spline, PsiTrajectory>> best;
  for (const ActionTuple& action : rec.planner.actions) {
    bool free = false;
    double cost = std::numeric_limits<double>::infinity();
    try {
      if (!(action.total_time > 0.0 && action.total_time <= horizon)) {
        throw std::domain_error("candidate time outside (0, t_pred]");
      }
      const Spline local = impose_boundary_conditions(action, Vec3::Zero(), rec.observation.v,
                                                      rec.observation.a);
      const Eigen::Matrix3Xd cps =
          f_to_world(d, Eigen::Matrix3Xd(local.control_points()), VectorKind::kPoint);
      Spline pos(SplineSpace::uav_position(), rec.t_d, action.total_time, cps);
      free = true;
      for (std::size_t i = 0; i < world.size(); ++i) {
        const BoxPair boxes{world[i].s_obst, cfg.expert.s_uav};
        if (!collision_free(pos, predictions[i], boxes)) {
          free = false;
          break;
        }
      }
      PsiTrajectory psi = psi_profile(pos, predictions[rec.obstacle_index], cfg.yaw_samples);
      cost = augmented_cost(pos, psi, predictions[rec.obstacle_index], g_world, cfg.weights,
                            cfg.limits);
      if (free && cost < best_cost) {
        best_cost = cost;
        best.emplace(std::move(pos), std::move(psi));
        rec.chosen = static_cast<int>(rec.collision_free.size());
      }
    } catch (const std::exception&) {
      // Degenerate candidates (e.g. a thrust direction pointing straight
      // down) cannot be flown and count as rejected.
      free = false;
    }
    rec.collision_free.push_back(free);
    rec.augmented_costs.push_back(cost);
    if (free) ++rec.n_collision_free;
  }
  if (best) {
    commitment.splice(rec.t_d, std::move(best->first), std::move(best->second));
  } else {
    rec.fallback = true;
    rec.chosen = -1;
  }
  return rec;
}

MissionLog run_mission(const Planner& planner, std::span<const ObstacleSpec> obstacles,
                       const MissionConfig& cfg, double duration,
                       const std::function<bool(const ReplanRecord&)>& on_replan) {
  cfg.validate();
  for (const auto& o : obstacles) o.validate();
  if (!(duration >= 0.0)) throw std::invalid_argument("run_mission: negative duration");
  const int ticks_per_replan = std::max(1, static_cast<int>(std::lround(cfg.replan_period / cfg.tick)));
  const long n_ticks = std::lround(duration / cfg.tick);

  MissionLog log;
  Commitment commitment = Commitment::hover(cfg.start, 0.0, 0.0);
  std::size_t goal = 0;
  bool stop = false;
  for (long k = 0; k <= n_ticks && !stop; ++k) {
    const double t = static_cast<double>(k) * cfg.tick;
    commitment.prune(t);
    const UAVState s = commitment.state(t);
    log.path.push_back({t, s.p});
    log.path_psi.push_back(s.psi);
    if ((s.p - cfg.goals[goal]).norm() < cfg.goal_tolerance) {
      ++log.goals_reached;
      log.goal_times.push_back(t);
      goal = (goal + 1) % cfg.goals.size();
      if (cfg.stop_after_goals > 0 && log.goals_reached >= cfg.stop_after_goals) break;
    }
    if (k % ticks_per_replan == 0 && k < n_ticks) {
      log.replans.push_back(replan_step(planner, commitment, t, cfg.goals[goal], obstacles, cfg));
      if (on_replan && !on_replan(log.replans.back())) stop = true;
    }
  }

  std::vector<ObstacleTrack> tracks;
  for (const auto& spec : obstacles) {
    tracks.push_back({[spec](double t) { return obstacle_position(spec, t); },
                      BoxPair{spec.s_obst, cfg.expert.s_uav}});
  }
  if (!tracks.empty()) {
    log.safety_ratio = safety_ratio(log.path, tracks);
    log.separating_axis_ratio = separating_axis_ratio(log.path, tracks);
  } else {
    log.safety_ratio = log.separating_axis_ratio = std::numeric_limits<double>::infinity();
  }
  return log;
}

Episode random_trefoil_episode(const MissionConfig& base, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> fraction(0.0, 1.0);
  Episode ep;
  ep.mission = base;
  const Vec3 start = base.start;
  const Vec3 g_term = start + Vec3(10.0 + unit(rng), 2.0 * unit(rng), 0.8 * unit(rng));
  ep.mission.goals = {g_term, start};
  ep.obstacle.kind = ObstacleKind::kTrefoil;
  ep.obstacle.offset = 0.5 * (start + g_term) + Vec3(2.0 * unit(rng), 1.0 * unit(rng), 0.4 * unit(rng));
  ep.obstacle.scale = Vec3(1.5 + 0.5 * unit(rng), 1.5 + 0.5 * unit(rng), 1.0 + 0.5 * unit(rng));
  ep.obstacle.phase = 2.0 * std::numbers::pi * fraction(rng);
  ep.obstacle.period = 10.0 + 4.0 * fraction(rng);
  return ep;
}

DaggerResult dagger_collect(const DaggerConfig& cfg, std::uint64_t seed,
                            const std::function<void(const std::string&)>& progress) {
  if (cfg.iterations < 1) throw std::invalid_argument("dagger_collect: iterations must be >= 1");
  if (cfg.target_pairs < 1) throw std::invalid_argument("dagger_collect: target_pairs must be >= 1");
  cfg.mission.validate();
  auto evaluator = std::make_shared<const PlanEvaluator>(cfg.mission.weights, cfg.mission.limits,
                                                         cfg.mission.yaw_samples);
  const Planner expert = expert_planner(cfg.mission.expert, evaluator);
  auto label = [&](const Observation& obs) { return expert.plan(obs); };

  DaggerResult result;
  std::mt19937_64 episode_seeds(seed);
  TrainConfig train_cfg = cfg.train;
  train_cfg.t_min = cfg.mission.expert.t_min;
  train_cfg.t_pred = cfg.mission.expert.t_pred;
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::size_t quota =
        static_cast<std::size_t>(cfg.target_pairs) * (it + 1) / cfg.iterations;
    std::optional<Planner> student;
    if (it > 0) {
      result.policy = train(result.dataset, train_cfg);
      student = student_planner(std::make_shared<const Policy>(result.policy->policy));
    }
    const Planner& pilot = student ? *student : expert;
    while (result.dataset.size() < quota) {
      const Episode ep = random_trefoil_episode(cfg.mission, episode_seeds());
      const std::vector<ObstacleSpec> world{ep.obstacle};
      run_mission(pilot, world, ep.mission, cfg.episode_duration, [&](const ReplanRecord& rec) {
        PlannerOutput labels = student ? label(rec.observation) : rec.planner;
        if (!labels.actions.empty()) {
          result.dataset.push_back({rec.observation, labels.actions, labels.costs});
        }
        return result.dataset.size() < quota;
      });
      if (progress) {
        progress("dagger iteration " + std::to_string(it) + ": " +
                 std::to_string(result.dataset.size()) + "/" + std::to_string(quota) + " pairs");
      }
    }
    result.size_after_iteration.push_back(result.dataset.size());
  }
  result.policy = train(result.dataset, train_cfg);
  return result;
}

}  // namespace dpanther
