// Command-line front end: one subcommand per experiment.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpanther/experiments.hpp"
#include "dpanther/io.hpp"

namespace fs = std::filesystem;
using namespace dpanther;

namespace {

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int ns = 0;
  int nruns = 0;
  bool paper_scale = false;
};

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.paper_scale) cfg.apply_paper_scale();
  if (c.ns > 0) cfg.expert.n_s = c.ns;
  if (c.nruns > 0) cfg.expert.n_runs = c.nruns;
  cfg.expert.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_out = true) {
  app->add_option("--config", c.config, "JSON configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "random seed");
  if (with_out) app->add_option("--out", c.out, "output path")->required();
  app->add_option("--ns", c.ns, "number of student heads / expert modes kept");
  app->add_option("--nruns", c.nruns, "expert multi-start runs");
  app->add_flag("--paper-scale", c.paper_scale, "full-size datasets (2000 static demos, 23000 DAgger pairs)");
}

std::ofstream open_csv(const fs::path& path, const ExperimentConfig& cfg) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# config_hash=" << config_hash(cfg) << '\n';
  out << std::setprecision(10);
  return out;
}

void report(const std::string& msg) { std::cerr << msg << '\n'; }

Planner planner_for(const std::string& checkpoint, const ExperimentConfig& cfg) {
  if (checkpoint.empty() || checkpoint == "expert") {
    auto evaluator =
        std::make_shared<const PlanEvaluator>(cfg.weights, cfg.limits, cfg.mission.yaw_samples);
    return expert_planner(cfg.expert, evaluator);
  }
  return student_planner(std::make_shared<const Policy>(load_policy(checkpoint)));
}

void print_histogram(const std::vector<Demonstration>& data, int n_s) {
  std::vector<int> hist(n_s + 1, 0);
  for (const auto& d : data) ++hist[std::min<int>(n_s, static_cast<int>(d.actions.size()))];
  std::cout << "n_e,count\n";
  for (int k = 1; k <= n_s; ++k) std::cout << k << ',' << hist[k] << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep-PANTHER lab: expert, student training and simulation experiments"};
  app.require_subcommand(1);

  Common gen_c;
  int count = -1;
  auto* gen = app.add_subcommand("gen-demos", "expert demonstrations for the static-obstacle scenario");
  add_common(gen, gen_c);
  gen->add_option("--count", count, "number of demonstrations (default: config scale)");

  Common dag_c;
  std::string dag_ckpt;
  auto* dag = app.add_subcommand("dagger", "DAgger data collection on randomized trefoil episodes");
  add_common(dag, dag_c);
  dag->add_option("--checkpoint", dag_ckpt, "where to save the final policy");

  Common train_c;
  std::string dataset, variant = "LSA";
  double eps = 0.0, split = 0.75;
  auto* trn = app.add_subcommand("train", "train a student on a dataset");
  add_common(trn, train_c);
  trn->add_option("--dataset", dataset, "JSON-lines dataset")->required()->check(CLI::ExistingFile);
  trn->add_option("--variant", variant, "LSA, WTAr, RWTAr, WTAc or RWTAc");
  trn->add_option("--epsilon", eps, "relaxation of RWTA variants");
  trn->add_option("--split", split, "fraction used for training");

  Common sweep_c;
  std::string sweep_dataset;
  auto* swp = app.add_subcommand("sweep", "train the 11-policy set (LSA, RWTAr-eps, RWTAc-eps)");
  add_common(swp, sweep_c, false);
  swp->add_option("--out", sweep_c.out, "output directory");
  swp->add_option("--dataset", sweep_dataset, "JSON-lines dataset")->check(CLI::ExistingFile);
  bool list_only = false;
  swp->add_flag("--list", list_only, "only print the policy set");

  Common mse_c;
  std::vector<std::string> mse_ckpts;
  std::string mse_dataset;
  auto* mse = app.add_subcommand("eval-mse", "per-kappa MSE on the held-out split");
  add_common(mse, mse_c);
  mse->add_option("--checkpoint", mse_ckpts, "checkpoints (first one is the reference)")->required();
  mse->add_option("--dataset", mse_dataset, "JSON-lines dataset")->required()->check(CLI::ExistingFile);
  mse->add_option("--split", split, "fraction used for training");

  Common grid_c;
  std::string grid_ckpt;
  auto* grid = app.add_subcommand("eval-grid", "8x8 static-obstacle goal grid");
  add_common(grid, grid_c);
  grid->add_option("--checkpoint", grid_ckpt, "policy checkpoint, or 'expert'");

  Common sim_c;
  std::string sim_ckpt, world = "trefoil";
  double duration = 45.0;
  int n_obstacles = 1;
  auto* sim = app.add_subcommand("sim", "back-and-forth mission (or multi-obstacle run)");
  add_common(sim, sim_c);
  sim->add_option("--checkpoint", sim_ckpt, "policy checkpoint, or 'expert'");
  sim->add_option("--world", world, "static, trefoil, square, eight, epitrochoid or multi");
  sim->add_option("--duration", duration, "seconds");
  sim->add_option("--obstacles", n_obstacles, "obstacle count for --world multi");

  auto* self = app.add_subcommand("selftest", "run the brute-force and finite-difference oracles");
  std::uint64_t self_seed = 1;
  self->add_option("--seed", self_seed, "random seed");

  auto* show = app.add_subcommand("config", "print the effective configuration");
  Common show_c;
  add_common(show, show_c, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const ExperimentConfig cfg = resolve(gen_c);
      const int n = count >= 0 ? count : cfg.static_demos;
      const auto data = generate_static_demos(cfg, n, gen_c.seed, report);
      write_dataset(gen_c.out, data);
      print_histogram(data, cfg.expert.n_s);
    } else if (*dag) {
      const ExperimentConfig cfg = resolve(dag_c);
      DaggerConfig dc;
      dc.iterations = cfg.dagger_iterations;
      dc.target_pairs = cfg.dagger_pairs;
      dc.episode_duration = cfg.dagger_episode;
      dc.mission = cfg.mission_config();
      dc.train = cfg.train_config(AssignmentVariant::kLSA, 0.0, dag_c.seed);
      const DaggerResult r = dagger_collect(dc, dag_c.seed, report);
      write_dataset(dag_c.out, r.dataset);
      if (!dag_ckpt.empty() && r.policy) save_policy(dag_ckpt, r.policy->policy);
      print_histogram(r.dataset, cfg.expert.n_s);
    } else if (*trn) {
      const ExperimentConfig cfg = resolve(train_c);
      const auto data = read_dataset(dataset);
      const auto [train_set, test_set] = split_dataset(data, split, train_c.seed);
      const TrainResult r =
          train(train_set, cfg.train_config(parse_variant(variant), eps, train_c.seed));
      save_policy(train_c.out, r.policy);
      write_loss_csv(train_c.out + ".loss.csv", r.loss_curve, config_hash(cfg));
      std::cout << "final_loss," << r.loss_curve.back() << '\n';
    } else if (*swp) {
      const ExperimentConfig cfg = resolve(sweep_c);
      const auto set = standard_policy_set();
      if (list_only) {
        for (const auto& p : set) std::cout << p.label() << '\n';
        return 0;
      }
      if (sweep_dataset.empty() || sweep_c.out.empty()) {
        std::cerr << "sweep needs --dataset and --out\n";
        return 2;
      }
      const auto data = read_dataset(sweep_dataset);
      const auto [train_set, test_set] = split_dataset(data, 0.75, sweep_c.seed);
      fs::create_directories(sweep_c.out);
      for (const auto& p : set) {
        report("training " + p.label());
        const TrainResult r = train(train_set, cfg.train_config(p.variant, p.eps, sweep_c.seed));
        const fs::path base = fs::path(sweep_c.out) / (p.label() + ".json");
        save_policy(base, r.policy);
        write_loss_csv(base.string() + ".loss.csv", r.loss_curve, config_hash(cfg));
        std::cout << base.string() << '\n';
      }
    } else if (*mse) {
      const ExperimentConfig cfg = resolve(mse_c);
      const auto data = read_dataset(mse_dataset);
      const auto test_set = split_dataset(data, split, mse_c.seed).second;
      std::vector<MseByKappa> results;
      for (const auto& c : mse_ckpts) results.push_back(evaluate_mse(load_policy(c), test_set));
      std::ofstream out = open_csv(mse_c.out, cfg);
      out << "checkpoint,kappa,n,mean_mse,ratio_to_reference\n";
      for (std::size_t k = 0; k < results.size(); ++k) {
        for (std::size_t kappa = 0; kappa < results[k].buckets.size(); ++kappa) {
          const double m = results[k].mean(static_cast<int>(kappa));
          const double ref = results[0].mean(static_cast<int>(kappa));
          out << mse_ckpts[k] << ',' << kappa << ',' << results[k].buckets[kappa].size() << ','
              << m << ',' << m / ref << '\n';
        }
      }
    } else if (*grid) {
      const ExperimentConfig cfg = resolve(grid_c);
      const auto cells = evaluate_static_grid(planner_for(grid_ckpt, cfg), cfg);
      std::ofstream out = open_csv(grid_c.out, cfg);
      out << "i_y,i_z,gx,gy,gz,n_candidates,n_collision_free,best_cost,latency_s\n";
      int green = 0;
      for (const auto& c : cells) {
        out << c.i_y << ',' << c.i_z << ',' << c.g_term.x() << ',' << c.g_term.y() << ','
            << c.g_term.z() << ',' << c.n_candidates << ',' << c.n_collision_free << ','
            << c.best_cost << ',' << c.latency_s << '\n';
        if (c.n_collision_free > 0) ++green;
      }
      std::cout << "goals_with_collision_free_candidate," << green << "/" << cells.size() << '\n';
    } else if (*sim) {
      ExperimentConfig cfg = resolve(sim_c);
      const Planner planner = planner_for(sim_ckpt, cfg);
      std::vector<ObstacleSpec> obstacles;
      MissionConfig mission;
      MissionLog mlog;
      if (world == "multi") {
        obstacles = multi_obstacle_world(n_obstacles, sim_c.seed);
        mlog = run_to_goal(planner, obstacles, multi_obstacle_mission(cfg), duration);
      } else {
        obstacles = {parse_obstacle_kind(world) == ObstacleKind::kTrefoil
                         ? generalization_obstacle(ObstacleKind::kTrefoil, sim_c.seed)
                         : generalization_obstacle(parse_obstacle_kind(world), sim_c.seed)};
        mlog = run_mission(planner, obstacles, back_and_forth_mission(cfg), duration);
      }
      const fs::path base(sim_c.out);
      if (base.has_parent_path()) fs::create_directories(base.parent_path());
      std::ofstream records(base.string() + ".jsonl");
      for (const auto& r : mlog.replans) records << replan_record_to_json(r) << '\n';
      std::ofstream path = open_csv(base.string() + ".path.csv", cfg);
      path << "t,x,y,z,psi\n";
      for (std::size_t k = 0; k < mlog.path.size(); ++k) {
        const auto& p = mlog.path[k];
        path << p.t << ',' << p.p.x() << ',' << p.p.y() << ',' << p.p.z() << ','
             << mlog.path_psi[k] << '\n';
      }
      const CollisionFreeSummary s = summarize(mlog);
      std::cout << "# config_hash=" << config_hash(cfg) << '\n'
                << "world,replans,cf0_pct,cf1to3_pct,cf4to6_pct,goals_reached,safety_ratio,"
                   "separating_axis_ratio\n"
                << world << ',' << s.replans << ',' << s.percent(s.zero) << ','
                << s.percent(s.one_to_three) << ',' << s.percent(s.four_to_six) << ','
                << mlog.goals_reached << ',' << mlog.safety_ratio << ','
                << mlog.separating_axis_ratio << '\n';
    } else if (*self) {
      bool ok = true;
      for (const auto& r : run_selftest(self_seed)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    } else if (*show) {
      std::cout << config_to_json(resolve(show_c)) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
