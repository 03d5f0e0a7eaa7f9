#include "dpanther/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dpanther/io.hpp"
#include "dpanther/yaw.hpp"
#include "json.hpp"

namespace dpanther {

using nlohmann::json;

// ---- configuration -----------------------------------------------------------

void ExperimentConfig::apply_paper_scale() {
  static_demos = 2000;
  dagger_pairs = 23000;
}

MissionConfig ExperimentConfig::mission_config() const {
  MissionConfig m = mission;
  m.weights = weights;
  m.limits = limits;
  m.expert = expert;
  return m;
}

TrainConfig ExperimentConfig::train_config(AssignmentVariant variant, double eps,
                                           std::uint64_t seed) const {
  TrainConfig t = train;
  t.loss.variant = variant;
  t.loss.eps = eps;
  t.seed = seed;
  t.n_s = expert.n_s;
  t.t_min = expert.t_min;
  t.t_pred = expert.t_pred;
  return t;
}

namespace {

json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

void read_vec3(const json& j, const char* key, Vec3& out) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw std::invalid_argument(std::string(key) + " needs three numbers");
  out = Vec3(v[0], v[1], v[2]);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json to_json(const ExperimentConfig& c) {
  json j;
  const CostWeights& w = c.weights;
  j["weights"] = {{"jerk", w.jerk}, {"yaw", w.yaw},       {"fov", w.fov},
                  {"goal", w.goal}, {"time", w.time},     {"lambda", w.lambda},
                  {"fov_angle", w.fov_angle}, {"fov_sharpness", w.fov_sharpness}};
  j["limits"] = {{"v_max", vec3_json(c.limits.v_max)},
                 {"a_max", vec3_json(c.limits.a_max)},
                 {"j_max", vec3_json(c.limits.j_max)},
                 {"psi_dot_max", c.limits.psi_dot_max}};
  const ExpertConfig& e = c.expert;
  j["expert"] = {{"n_runs", e.n_runs},
                 {"n_s", e.n_s},
                 {"t_pred", e.t_pred},
                 {"t_min", e.t_min},
                 {"dedupe_threshold", e.dedupe_threshold},
                 {"mu_coll", e.mu_coll},
                 {"collision_margin", e.collision_margin},
                 {"max_iterations", e.max_iterations},
                 {"fd_step", e.fd_step},
                 {"v_nominal", e.v_nominal},
                 {"time_slack", e.time_slack},
                 {"s_uav", vec3_json(e.s_uav)}};
  const MissionConfig& m = c.mission;
  j["mission"] = {{"sphere_radius", m.sphere_radius}, {"replan_period", m.replan_period},
                  {"tick", m.tick},                   {"goal_tolerance", m.goal_tolerance},
                  {"yaw_samples", m.yaw_samples}};
  const TrainConfig& t = c.train;
  j["train"] = {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"lr", t.lr},
                {"beta_p", t.loss.beta_p}, {"beta_t", t.loss.beta_t}};
  j["scale"] = {{"static_demos", c.static_demos},
                {"dagger_pairs", c.dagger_pairs},
                {"dagger_iterations", c.dagger_iterations},
                {"dagger_episode", c.dagger_episode}};
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  if (j.contains("weights")) {
    const json& w = j["weights"];
    read(w, "jerk", c.weights.jerk);
    read(w, "yaw", c.weights.yaw);
    read(w, "fov", c.weights.fov);
    read(w, "goal", c.weights.goal);
    read(w, "time", c.weights.time);
    read(w, "lambda", c.weights.lambda);
    read(w, "fov_angle", c.weights.fov_angle);
    read(w, "fov_sharpness", c.weights.fov_sharpness);
  }
  if (j.contains("limits")) {
    const json& l = j["limits"];
    read_vec3(l, "v_max", c.limits.v_max);
    read_vec3(l, "a_max", c.limits.a_max);
    read_vec3(l, "j_max", c.limits.j_max);
    read(l, "psi_dot_max", c.limits.psi_dot_max);
  }
  if (j.contains("expert")) {
    const json& e = j["expert"];
    read(e, "n_runs", c.expert.n_runs);
    read(e, "n_s", c.expert.n_s);
    read(e, "t_pred", c.expert.t_pred);
    read(e, "t_min", c.expert.t_min);
    read(e, "dedupe_threshold", c.expert.dedupe_threshold);
    read(e, "mu_coll", c.expert.mu_coll);
    read(e, "collision_margin", c.expert.collision_margin);
    read(e, "max_iterations", c.expert.max_iterations);
    read(e, "fd_step", c.expert.fd_step);
    read(e, "v_nominal", c.expert.v_nominal);
    read(e, "time_slack", c.expert.time_slack);
    read_vec3(e, "s_uav", c.expert.s_uav);
  }
  if (j.contains("mission")) {
    const json& m = j["mission"];
    read(m, "sphere_radius", c.mission.sphere_radius);
    read(m, "replan_period", c.mission.replan_period);
    read(m, "tick", c.mission.tick);
    read(m, "goal_tolerance", c.mission.goal_tolerance);
    read(m, "yaw_samples", c.mission.yaw_samples);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    read(t, "epochs", c.train.epochs);
    read(t, "batch_size", c.train.batch_size);
    read(t, "lr", c.train.lr);
    read(t, "beta_p", c.train.loss.beta_p);
    read(t, "beta_t", c.train.loss.beta_t);
  }
  if (j.contains("scale")) {
    const json& s = j["scale"];
    read(s, "static_demos", c.static_demos);
    read(s, "dagger_pairs", c.dagger_pairs);
    read(s, "dagger_iterations", c.dagger_iterations);
    read(s, "dagger_episode", c.dagger_episode);
  }
  c.weights.validate();
  c.limits.validate();
  c.expert.validate();
  c.mission_config().validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2); }

std::string config_hash(const ExperimentConfig& cfg) { return fnv1a_hex(to_json(cfg).dump()); }

// ---- static obstacle scenario -------------------------------------------------

Vec3 static_grid_goal(int i_y, int i_z) {
  if (i_y < 0 || i_y >= kStaticGridSize || i_z < 0 || i_z >= kStaticGridSize) {
    throw std::out_of_range("grid index out of range");
  }
  auto coord = [](int i) {
    return -kStaticGoalRange + 2.0 * kStaticGoalRange * i / (kStaticGridSize - 1);
  };
  return {7.0, coord(i_y), 1.0 + coord(i_z)};
}

ObstacleSpec static_obstacle_spec() {
  ObstacleSpec spec;
  spec.kind = ObstacleKind::kStatic;
  spec.offset = kStaticObstacle;
  return spec;
}

Observation static_observation(const Vec3& g_term, const ExperimentConfig& cfg) {
  UAVState d;
  d.p = kStaticStart;
  return build_observation(d, 0.0, static_obstacle_spec(), g_term, cfg.mission_config());
}

std::vector<Demonstration> generate_static_demos(const ExperimentConfig& cfg, int count,
                                                 std::uint64_t seed, const ProgressFn& progress) {
  if (count < 0) throw std::invalid_argument("generate_static_demos: negative count");
  const PlanEvaluator evaluator(cfg.weights, cfg.limits, cfg.mission.yaw_samples);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-kStaticGoalRange, kStaticGoalRange);
  std::vector<Demonstration> out;
  const long max_attempts = 4L * count + 16;
  for (long attempt = 0; static_cast<int>(out.size()) < count && attempt < max_attempts; ++attempt) {
    const double a = coord(rng);
    const double b = coord(rng);
    Demonstration demo;
    demo.obs = static_observation(Vec3(7.0, a, 1.0 + b), cfg);
    for (const auto& s : expert_plan(demo.obs, cfg.expert, evaluator)) {
      demo.actions.push_back(s.action);
      demo.costs.push_back(s.cost);
    }
    if (demo.actions.empty()) continue;
    out.push_back(std::move(demo));
    if (progress && out.size() % 50 == 0) {
      progress("static demos: " + std::to_string(out.size()) + "/" + std::to_string(count));
    }
  }
  return out;
}

std::vector<GridCell> evaluate_static_grid(const Planner& planner, const ExperimentConfig& cfg) {
  const MissionConfig mission = cfg.mission_config();
  const std::vector<ObstacleSpec> world{static_obstacle_spec()};
  std::vector<GridCell> cells;
  for (int i_z = 0; i_z < kStaticGridSize; ++i_z) {
    for (int i_y = 0; i_y < kStaticGridSize; ++i_y) {
      GridCell cell;
      cell.i_y = i_y;
      cell.i_z = i_z;
      cell.g_term = static_grid_goal(i_y, i_z);
      // Replanning at t = -replan_period makes the new plan start at t = 0
      // from rest at the start position.
      Commitment commitment = Commitment::hover(kStaticStart, 0.0, -mission.replan_period);
      const ReplanRecord rec =
          replan_step(planner, commitment, -mission.replan_period, cell.g_term, world, mission);
      cell.n_candidates = rec.n_candidates;
      cell.n_collision_free = rec.n_collision_free;
      cell.best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < rec.augmented_costs.size(); ++k) {
        if (rec.collision_free[k]) cell.best_cost = std::min(cell.best_cost, rec.augmented_costs[k]);
      }
      cell.latency_s = rec.planner_latency_s;
      cells.push_back(cell);
    }
  }
  return cells;
}

// ---- imitation metrics ----------------------------------------------------------

std::pair<std::vector<Demonstration>, std::vector<Demonstration>> split_dataset(
    std::span<const Demonstration> data, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("split fraction");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_first = static_cast<std::size_t>(std::lround(fraction * data.size()));
  std::pair<std::vector<Demonstration>, std::vector<Demonstration>> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_first ? out.first : out.second).push_back(data[order[k]]);
  }
  return out;
}

double MseByKappa::mean(int kappa) const {
  const auto& b = buckets.at(kappa);
  if (b.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
}

double MseByKappa::overall_mean() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& b : buckets) {
    sum = std::accumulate(b.begin(), b.end(), sum);
    n += b.size();
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

MseByKappa evaluate_mse(const Policy& policy, std::span<const Demonstration> data) {
  MseByKappa out;
  out.buckets.resize(policy.n_s());
  for (const auto& demo : data) {
    const NormalizedDemo nd = normalize_demo(demo, policy.normalizer);
    const std::vector<ActionTuple::Vector> heads =
        split_heads(forward(policy.params, Eigen::VectorXd(nd.obs)));
    const CostMatrices d = cost_matrices(nd.actions, heads);
    const Eigen::MatrixXd a = lsa_assign(d.d_p);
    std::vector<double> mse;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      Eigen::Index j = 0;
      a.row(i).maxCoeff(&j);
      mse.push_back(d.d_p(i, j));
    }
    std::sort(mse.begin(), mse.end());
    for (std::size_t k = 0; k < mse.size(); ++k) out.buckets[k].push_back(mse[k]);
  }
  return out;
}

std::string PolicyVariant::label() const {
  if (variant == AssignmentVariant::kLSA || variant == AssignmentVariant::kWTAr ||
      variant == AssignmentVariant::kWTAc) {
    return std::string(to_string(variant));
  }
  std::ostringstream out;
  out << to_string(variant) << '-' << eps;
  return out.str();
}

std::vector<PolicyVariant> standard_policy_set() {
  std::vector<PolicyVariant> set{{AssignmentVariant::kLSA, 0.0}};
  for (auto v : {AssignmentVariant::kRWTAr, AssignmentVariant::kRWTAc}) {
    for (double eps : {0.0, 0.05, 0.15, 0.25, 0.35}) set.push_back({v, eps});
  }
  return set;
}

// ---- missions -------------------------------------------------------------------

ObstacleSpec generalization_obstacle(ObstacleKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> fraction(0.0, 1.0);
  ObstacleSpec spec;
  spec.kind = kind;
  spec.offset = Vec3(5.0, 0.0, 1.0);
  spec.scale = Vec3(1.5, 1.5, 1.0);
  spec.phase = 2.0 * std::numbers::pi * fraction(rng);
  spec.period = 10.0 + 4.0 * fraction(rng);
  return spec;
}

MissionConfig back_and_forth_mission(const ExperimentConfig& cfg) {
  MissionConfig m = cfg.mission_config();
  m.start = Vec3(0.0, 0.0, 1.0);
  m.goals = {Vec3(10.0, 0.0, 1.0), Vec3(0.0, 0.0, 1.0)};
  return m;
}

CollisionFreeSummary summarize(const MissionLog& log) {
  CollisionFreeSummary s;
  for (const auto& r : log.replans) {
    ++s.replans;
    if (r.n_collision_free == 0) {
      ++s.zero;
    } else if (r.n_collision_free <= 3) {
      ++s.one_to_three;
    } else {
      ++s.four_to_six;
    }
  }
  return s;
}

std::vector<ObstacleSpec> multi_obstacle_world(int n_obstacles, std::uint64_t seed) {
  if (n_obstacles < 0) throw std::invalid_argument("negative obstacle count");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> fraction(0.0, 1.0);
  std::vector<ObstacleSpec> world;
  for (int i = 0; i < n_obstacles; ++i) {
    ObstacleSpec spec;
    spec.kind = ObstacleKind::kEpitrochoid;
    spec.offset = Vec3(4.0 + 7.0 * fraction(rng), -1.0 + 2.0 * fraction(rng),
                       0.6 + 0.8 * fraction(rng));
    const double s = 0.8 + 0.7 * fraction(rng);
    spec.scale = Vec3(s, s, 1.0);
    spec.phase = 2.0 * std::numbers::pi * fraction(rng);
    spec.period = 8.0 + 6.0 * fraction(rng);
    world.push_back(spec);
  }
  return world;
}

MissionConfig multi_obstacle_mission(const ExperimentConfig& cfg) {
  MissionConfig m = cfg.mission_config();
  m.start = Vec3(0.0, 0.0, 1.0);
  m.goals = {Vec3(15.0, 0.0, 1.0)};
  return m;
}

MissionLog run_to_goal(const Planner& planner, std::span<const ObstacleSpec> world,
                       const MissionConfig& mission, double duration) {
  MissionConfig m = mission;
  m.stop_after_goals = 1;
  return run_mission(planner, world, m, duration);
}

// ---- self test -------------------------------------------------------------------

namespace {

// Lexicographically first minimum-cost injective assignment by enumeration.
std::vector<int> enumerate_lsa(const Eigen::MatrixXd& d, double& best_cost) {
  const int n = static_cast<int>(d.rows());
  const int m = static_cast<int>(d.cols());
  std::vector<int> current(n), best;
  std::vector<char> used(m, 0);
  best_cost = std::numeric_limits<double>::infinity();
  std::function<void(int)> rec = [&](int i) {
    if (i == n) {
      double c = 0.0;
      for (int r = 0; r < n; ++r) c += d(r, current[r]);
      if (c < best_cost) {
        best_cost = c;
        best = current;
      }
      return;
    }
    for (int j = 0; j < m; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      current[i] = j;
      rec(i + 1);
      used[j] = 0;
    }
  };
  rec(0);
  return best;
}

SelftestResult lsa_oracle(std::mt19937_64& rng,
                          const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& lsa) {
  SelftestResult r{"lsa_enumeration", true, ""};
  std::uniform_int_distribution<int> size(1, 6);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  std::uniform_int_distribution<int> small(0, 2);
  for (int trial = 0; trial < 200 && r.passed; ++trial) {
    const int n_s = size(rng);
    const int n_e = std::uniform_int_distribution<int>(1, n_s)(rng);
    Eigen::MatrixXd d(n_e, n_s);
    const bool ties = trial % 2 == 1;  // small integers make ties common
    for (int i = 0; i < n_e; ++i) {
      for (int j = 0; j < n_s; ++j) d(i, j) = ties ? small(rng) : value(rng);
    }
    double best = 0.0;
    const std::vector<int> expected = enumerate_lsa(d, best);
    const Eigen::MatrixXd a = lsa(d);
    for (int i = 0; i < n_e; ++i) {
      if (a(i, expected[i]) != 1.0 || a.row(i).sum() != 1.0) {
        r.passed = false;
        r.detail = "trial " + std::to_string(trial) + " row " + std::to_string(i) +
                   " differs from the lexicographically first optimum";
        break;
      }
    }
  }
  if (r.passed) r.detail = "200 matrices, n_e <= n_s <= 6";
  return r;
}

SelftestResult yaw_oracle(std::mt19937_64& rng) {
  SelftestResult r{"yaw_circle_search", true, ""};
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 rv(normal(rng), normal(rng), normal(rng));
    Vec3 xi(normal(rng), normal(rng), std::abs(normal(rng)) + 0.2);
    const Vec3 b1 = b1_closed_form(rv, xi);
    const double closed = b1.dot(rv.normalized());
    const Vec3 e1 = xi.unitOrthogonal();
    const Vec3 e2 = xi.normalized().cross(e1);
    double search = -1.0;
    for (int k = 0; k < 20000; ++k) {
      const double th = 2.0 * std::numbers::pi * k / 20000.0;
      search = std::max(search, (std::cos(th) * e1 + std::sin(th) * e2).dot(rv.normalized()));
    }
    worst = std::min(worst, closed - search);
  }
  r.passed = worst >= -1e-4;
  r.detail = "min(closed form - circle search) = " + std::to_string(worst);
  return r;
}

SelftestResult spline_oracle(std::mt19937_64& rng) {
  SelftestResult r{"spline_fit_round_trip", true, ""};
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd cps(3, 10);
  for (Eigen::Index k = 0; k < cps.size(); ++k) cps(k) = normal(rng);
  const Spline s(SplineSpace::obstacle(), 0.5, 3.0, cps);
  std::vector<double> times;
  Eigen::MatrixXd values(3, 60);
  for (int i = 0; i < 60; ++i) {
    times.push_back(0.5 + 3.0 * i / 59.0);
    values.col(i) = s.eval(times.back());
  }
  const double err = (fit(SplineSpace::obstacle(), times, values).control_points() - cps).cwiseAbs().maxCoeff();
  r.passed = err < 1e-8;
  r.detail = "max control-point error " + std::to_string(err);
  return r;
}

SelftestResult gradient_oracle(std::mt19937_64& rng) {
  SelftestResult r{"loss_gradient", true, ""};
  const PolicyParams params = PolicyParams::random({Observation::kSize, 8, 8, 3 * 13}, rng());
  std::normal_distribution<double> normal(0.0, 0.5);
  std::vector<NormalizedDemo> batch(3);
  for (int b = 0; b < 3; ++b) {
    for (int k = 0; k < Observation::kSize; ++k) batch[b].obs(k) = normal(rng);
    for (int e = 0; e <= b; ++e) {
      ActionTuple::Vector a;
      for (int k = 0; k < 13; ++k) a(k) = normal(rng);
      batch[b].actions.push_back(a);
    }
  }
  // Hold the assignment fixed so that the loss is smooth in the weights.
  LossConfig cfg;
  std::vector<Eigen::MatrixXd> assignments;
  for (const auto& demo : batch) {
    const auto heads = split_heads(forward(params, Eigen::VectorXd(demo.obs)));
    assignments.push_back(lsa_assign(cost_matrices(demo.actions, heads).d_p));
  }
  const LossAndGradient lg = loss_and_gradient_fixed(params, batch, assignments, cfg);
  double worst = 0.0;
  std::uniform_int_distribution<Eigen::Index> pick(0, params.num_parameters() - 1);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index k = pick(rng);
    PolicyParams plus = params, minus = params;
    constexpr double h = 1e-5;
    plus.theta(k) += h;
    minus.theta(k) -= h;
    const double fd = (loss_and_gradient_fixed(plus, batch, assignments, cfg).loss -
                       loss_and_gradient_fixed(minus, batch, assignments, cfg).loss) /
                      (2.0 * h);
    const double err = std::abs(fd - lg.gradient(k)) / std::max(1e-6, std::abs(fd) + std::abs(lg.gradient(k)));
    worst = std::max(worst, err);
  }
  r.passed = worst < 1e-4;
  r.detail = "max relative error " + std::to_string(worst);
  return r;
}

}  // namespace

std::vector<SelftestResult> run_selftest(
    std::uint64_t seed, const std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>& lsa) {
  std::mt19937_64 rng(seed);
  std::vector<SelftestResult> out;
  out.push_back(lsa_oracle(rng, lsa));
  out.push_back(yaw_oracle(rng));
  out.push_back(spline_oracle(rng));
  out.push_back(gradient_oracle(rng));
  return out;
}

}  // namespace dpanther
