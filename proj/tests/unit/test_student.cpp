#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dpanther/student.hpp"

namespace dpanther {
namespace {

std::vector<Demonstration> synthetic_data(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Demonstration> data;
  for (int i = 0; i < n; ++i) {
    Demonstration d;
    d.obs.g = Vec3(7, 1.7 * u(rng), 1.7 * u(rng));
    for (int k = 0; k < 10; ++k) d.obs.obst_cps[k] = Vec3(2.5, 0, 0);
    const int modes = 1 + i % 3;
    for (int m = 0; m < modes; ++m) {
      ActionTuple a;
      const double side = m == 0 ? 1.0 : (m == 1 ? -1.0 : 0.0);
      for (int k = 0; k < 4; ++k) {
        a.qhat[k] = d.obs.g * (k + 1) / 4.0 + Vec3(0, side * (k < 3 ? 1.0 : 0.0), 0);
      }
      a.total_time = 3.0 + 0.5 * m + 0.2 * u(rng);
      d.actions.push_back(a);
      d.costs.push_back(10.0 + m);
    }
    data.push_back(d);
  }
  return data;
}

TEST(PolicyParams, LayoutAndInitRange) {
  const auto sizes = student_architecture(6);
  EXPECT_EQ(sizes, (std::vector<int>{43, 64, 64, 78}));
  const PolicyParams p = PolicyParams::random(sizes, 3);
  EXPECT_EQ(p.num_parameters(), 43 * 64 + 64 + 64 * 64 + 64 + 64 * 78 + 78);
  EXPECT_EQ(p.weight_offset(0), 0);
  EXPECT_EQ(p.bias_offset(0), 43 * 64);
  EXPECT_EQ(p.weight_offset(1), 43 * 64 + 64);
  EXPECT_EQ(p.weight(0).rows(), 64);
  EXPECT_EQ(p.weight(0).cols(), 43);
  EXPECT_EQ(p.weight(0)(0, 1), p.theta(1));  // row-major
  EXPECT_LE(p.weight(0).cwiseAbs().maxCoeff(), 1.0 / std::sqrt(43.0));
  EXPECT_LE(p.weight(1).cwiseAbs().maxCoeff(), 1.0 / 8.0);
  EXPECT_EQ(PolicyParams::random(sizes, 3).theta, p.theta);
  EXPECT_NE(PolicyParams::random(sizes, 4).theta, p.theta);
}

TEST(Forward, MatchesHandWrittenNetwork) {
  const PolicyParams p = PolicyParams::random({4, 5, 3}, 1);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  const Eigen::VectorXd h = (p.weight(0) * x + p.bias(0)).cwiseMax(0.0);
  const Eigen::VectorXd y = p.weight(1) * h + p.bias(1);
  EXPECT_LT((forward(p, x) - y).norm(), 1e-14);
  Eigen::MatrixXd batch(4, 2);
  batch << x, -x;
  EXPECT_LT((forward(p, batch).col(0) - y).norm(), 1e-14);
}

TEST(SplitHeads, ThirteenScalarsPerHead) {
  Eigen::VectorXd out = Eigen::VectorXd::LinSpaced(26, 0, 25);
  const auto heads = split_heads(out);
  ASSERT_EQ(heads.size(), 2u);
  EXPECT_EQ(heads[1](0), 13.0);
  EXPECT_THROW(split_heads(Eigen::VectorXd::Zero(14)), std::invalid_argument);
}

TEST(Normalizer, RoundTripAndTimeMapping) {
  const auto data = synthetic_data(20, 1);
  const Normalizer n = Normalizer::fit(data, 0.5, 6.0);
  ASSERT_TRUE(n.fitted());
  for (const auto& d : data) {
    const auto z = n.normalize_observation(d.obs);
    EXPECT_LE(z.cwiseAbs().maxCoeff(), 1.0);
    for (const auto& a : d.actions) {
      const auto x = n.normalize_action(a);
      EXPECT_LE(x.head<12>().cwiseAbs().maxCoeff(), 1.0);
      EXPECT_LT((n.denormalize_action(x).flatten() - a.flatten()).norm(), 1e-12);
    }
  }
  ActionTuple a;
  a.total_time = 0.5;
  EXPECT_NEAR(n.normalize_action(a)(12), -1.0, 1e-15);
  a.total_time = 6.0;
  EXPECT_NEAR(n.normalize_action(a)(12), 1.0, 1e-15);
  // Constant observation dimension (v.x == 0 everywhere) maps 0 to 0.
  EXPECT_NEAR(n.normalize_observation(data[0].obs)(0), 0.0, 1e-15);
  const Normalizer copy = Normalizer::from_ranges(n.ranges());
  EXPECT_EQ(copy.normalize_observation(data[3].obs), n.normalize_observation(data[3].obs));
}

class GradientCheck : public ::testing::TestWithParam<std::pair<AssignmentVariant, double>> {};

TEST_P(GradientCheck, AgreesWithCentralDifferences) {
  const auto data = synthetic_data(6, 2);
  const Normalizer norm = Normalizer::fit(data, 0.5, 6.0);
  std::vector<NormalizedDemo> batch;
  for (const auto& d : data) batch.push_back(normalize_demo(d, norm));
  PolicyParams p = PolicyParams::random({43, 8, 8, 13 * 3}, 5);
  const LossConfig cfg{GetParam().first, GetParam().second, 1.0, 1.0};

  // Freeze the assignment at theta so the loss is smooth in theta.
  std::vector<Eigen::MatrixXd> assignments;
  for (const auto& b : batch) {
    std::vector<ActionTuple::Vector> ex = b.actions;
    const auto st = split_heads(forward(p, Eigen::VectorXd(b.obs)));
    assignments.push_back(assign(cost_matrices(ex, st).d_p, cfg.variant, cfg.eps));
  }
  const LossAndGradient lg = loss_and_gradient_fixed(p, batch, assignments, cfg);
  EXPECT_NEAR(loss_and_gradient(p, std::span<const NormalizedDemo>(batch), cfg).loss, lg.loss,
              1e-12);
  std::mt19937_64 rng(6);
  const double h = 1e-5;
  for (int k = 0; k < 50; ++k) {
    const Eigen::Index i = static_cast<Eigen::Index>(rng() % p.theta.size());
    const double saved = p.theta(i);
    p.theta(i) = saved + h;
    const double up = loss_and_gradient_fixed(p, batch, assignments, cfg).loss;
    p.theta(i) = saved - h;
    const double down = loss_and_gradient_fixed(p, batch, assignments, cfg).loss;
    p.theta(i) = saved;
    const double fd = (up - down) / (2 * h);
    EXPECT_LT(std::abs(fd - lg.gradient(i)), 1e-4 * std::max(1.0, std::abs(fd))) << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, GradientCheck,
                         ::testing::Values(std::make_pair(AssignmentVariant::kLSA, 0.0),
                                           std::make_pair(AssignmentVariant::kRWTAr, 0.15),
                                           std::make_pair(AssignmentVariant::kRWTAc, 0.25)),
                         [](const auto& info) {
                           return std::string(to_string(info.param.first)) + "_eps" +
                                  std::to_string(static_cast<int>(info.param.second * 100));
                         });

TEST(Adam, FirstStepMovesByLearningRate) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd g = (Eigen::VectorXd(3) << 2.0, -0.5, 0.0).finished();
  AdamState s;
  adam_step(theta, g, s, 0.01);
  EXPECT_EQ(s.step, 1);
  EXPECT_NEAR(theta(0), -0.01 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_NEAR(theta(1), 0.01 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_EQ(theta(2), 0.0);
  // Second step with the same gradient: bias correction keeps the step at lr.
  adam_step(theta, g, s, 0.01);
  EXPECT_NEAR(theta(0), -0.02, 1e-9);
}

TEST(Adam, RejectsNonFiniteGradient) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(2);
  AdamState s;
  Eigen::VectorXd g(2);
  g << 1.0, std::nan("");
  EXPECT_THROW(adam_step(theta, g, s), std::invalid_argument);
}

TEST(Train, LossDecreasesAndIsDeterministic) {
  const auto data = synthetic_data(48, 3);
  TrainConfig cfg;
  cfg.n_s = 3;
  cfg.epochs = 60;
  cfg.batch_size = 16;
  cfg.seed = 9;
  const TrainResult a = train(data, cfg);
  ASSERT_EQ(a.loss_curve.size(), 60u);
  EXPECT_LT(a.loss_curve.back(), 0.5 * a.loss_curve.front());
  const TrainResult b = train(data, cfg);
  EXPECT_EQ(a.policy.params.theta, b.policy.params.theta);
  EXPECT_EQ(a.policy.n_s(), 3);

  const auto actions = predict(a.policy, data[0].obs);
  ASSERT_EQ(actions.size(), 3u);
  for (const auto& act : actions) {
    EXPECT_GE(act.total_time, cfg.t_min);
    EXPECT_LE(act.total_time, cfg.t_pred);
  }
}

TEST(Train, RejectsEmptyData) {
  EXPECT_THROW(train(std::vector<Demonstration>{}, TrainConfig{}), std::invalid_argument);
}

}  // namespace
}  // namespace dpanther
