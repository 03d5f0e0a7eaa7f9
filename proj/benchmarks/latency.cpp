// Planner latencies on the static-obstacle scenario.
#include <memory>
#include <random>

#include <benchmark/benchmark.h>

#include "dpanther/experiments.hpp"

namespace {

using namespace dpanther;

const ExperimentConfig& config() {
  static const ExperimentConfig cfg;
  return cfg;
}

Observation center_observation() { return static_observation(static_grid_goal(3, 4), config()); }

static void BM_ExpertPlan(benchmark::State& state) {
  const PlanEvaluator evaluator(config().weights, config().limits, config().mission.yaw_samples);
  const Observation obs = center_observation();
  for (auto _ : state) benchmark::DoNotOptimize(expert_plan(obs, config().expert, evaluator));
}
BENCHMARK(BM_ExpertPlan)->Unit(benchmark::kMillisecond);

static void BM_PlanEvaluation(benchmark::State& state) {
  const PlanEvaluator evaluator(config().weights, config().limits, config().mission.yaw_samples);
  const Observation obs = center_observation();
  const PlanningProblem problem = make_problem(obs, config().expert);
  const ActionTuple action = initial_guesses(obs, 1, config().expert).front();
  for (auto _ : state) benchmark::DoNotOptimize(evaluator.evaluate(problem, action));
}
BENCHMARK(BM_PlanEvaluation)->Unit(benchmark::kMicrosecond);

// Untrained weights: the forward pass costs the same.
static void BM_StudentPredict(benchmark::State& state) {
  Demonstration demo;
  demo.obs = center_observation();
  ActionTuple a;
  a.total_time = 3.0;
  demo.actions = {a};
  demo.costs = {0.0};
  const std::vector<Demonstration> data{demo};
  Policy policy;
  policy.params = PolicyParams::random(student_architecture(config().expert.n_s), 1);
  policy.normalizer = Normalizer::fit(data, config().expert.t_min, config().expert.t_pred);
  for (auto _ : state) benchmark::DoNotOptimize(predict(policy, demo.obs));
}
BENCHMARK(BM_StudentPredict)->Unit(benchmark::kMicrosecond);

static void BM_LsaAssign(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd d(n, 6);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < 6; ++c) d(r, c) = u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(lsa_assign(d));
}
BENCHMARK(BM_LsaAssign)->DenseRange(1, 6);

}  // namespace

BENCHMARK_MAIN();
