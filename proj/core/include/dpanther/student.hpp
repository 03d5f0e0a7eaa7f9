#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dpanther/assignment.hpp"
#include "dpanther/observation.hpp"
#include "dpanther/splines.hpp"

namespace dpanther {

/// One (observation, expert modes) pair; actions are sorted by ascending cost.
struct Demonstration {
  Observation obs;
  std::vector<ActionTuple> actions;
  std::vector<double> costs;
};

/// Min-max scaling of observations and actions to [-1, 1]. Position scalars
/// use ranges measured on data; T always maps [t_min, t_pred] to [-1, 1].
class Normalizer {
 public:
  Normalizer() = default;

  /// Ranges from the data, padded by `margin` of their width on both sides;
  /// a constant dimension gets the range [value - 1, value + 1].
  static Normalizer fit(std::span<const Demonstration> data, double t_min, double t_pred,
                        double margin = 0.05);

  bool fitted() const { return obs_lo_.size() == Observation::kSize; }
  double t_min() const { return t_lo_; }
  double t_pred() const { return t_hi_; }

  Observation::Vector normalize_observation(const Observation& obs) const;
  ActionTuple::Vector normalize_action(const ActionTuple& action) const;
  ActionTuple denormalize_action(const ActionTuple::Vector& x) const;

  /// Raw ranges, for serialization.
  struct Ranges {
    Eigen::VectorXd obs_lo, obs_hi, act_lo, act_hi;
    double t_min = 0.0, t_pred = 0.0;
  };
  Ranges ranges() const;
  static Normalizer from_ranges(const Ranges& r);

 private:
  Eigen::VectorXd obs_lo_, obs_hi_;  // 43
  Eigen::VectorXd act_lo_, act_hi_;  // 12
  double t_lo_ = 0.0, t_hi_ = 0.0;
};

/// Dense ReLU network with a linear output layer; all weights and biases
/// live in one flat vector, layer by layer (row-major W, then b).
struct PolicyParams {
  std::vector<int> layer_sizes;  // e.g. {43, 64, 64, 78}
  Eigen::VectorXd theta;

  static PolicyParams zeros(std::vector<int> layer_sizes);
  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  static PolicyParams random(std::vector<int> layer_sizes, std::uint64_t seed);

  int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  Eigen::Index num_parameters() const { return theta.size(); }

  using RowMajorMap =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  RowMajorMap weight(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
  Eigen::Index weight_offset(int layer) const;
  Eigen::Index bias_offset(int layer) const;
};

/// Architecture of the student for n_s heads: 43 -> 64 -> 64 -> 13 n_s.
std::vector<int> student_architecture(int n_s, int hidden = 64, int hidden_layers = 2);

/// Network output for a batch; inputs and outputs are stored column-wise.
Eigen::MatrixXd forward(const PolicyParams& params, const Eigen::MatrixXd& inputs);
Eigen::VectorXd forward(const PolicyParams& params, const Eigen::VectorXd& input);

struct LossConfig {
  AssignmentVariant variant = AssignmentVariant::kLSA;
  double eps = 0.0;
  double beta_p = 1.0;
  double beta_t = 1.0;
};

/// A demonstration in network coordinates.
struct NormalizedDemo {
  Observation::Vector obs;
  std::vector<ActionTuple::Vector> actions;
};

NormalizedDemo normalize_demo(const Demonstration& demo, const Normalizer& normalizer);

/// Splits a flat network output into n_s action vectors.
std::vector<ActionTuple::Vector> split_heads(const Eigen::VectorXd& output);

struct LossAndGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as PolicyParams::theta
};

/// Mean over the batch of the assignment loss. The assignment is recomputed
/// from the current outputs and then held fixed for differentiation.
LossAndGradient loss_and_gradient(const PolicyParams& params,
                                  std::span<const NormalizedDemo* const> batch,
                                  const LossConfig& cfg);
LossAndGradient loss_and_gradient(const PolicyParams& params, std::span<const NormalizedDemo> batch,
                                  const LossConfig& cfg);

/// Same loss with caller-supplied assignment matrices (one per demonstration).
LossAndGradient loss_and_gradient_fixed(const PolicyParams& params,
                                        std::span<const NormalizedDemo> batch,
                                        std::span<const Eigen::MatrixXd> assignments,
                                        const LossConfig& cfg);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of `theta` in place.
void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& gradient, AdamState& state,
               double lr = 1e-3);

struct TrainConfig {
  LossConfig loss;
  int n_s = 6;
  int epochs = 500;
  int batch_size = 64;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double t_min = 0.5;
  double t_pred = 6.0;
};

/// Trained student: the network plus the normalizer fitted on its training data.
struct Policy {
  PolicyParams params;
  Normalizer normalizer;

  int n_s() const { return params.output_size() / ActionTuple::kSize; }
};

struct TrainResult {
  Policy policy;
  std::vector<double> loss_curve;  // mean training loss of every epoch
};

TrainResult train(std::span<const Demonstration> data, const TrainConfig& cfg);

/// Denormalized student actions; T is clamped to [t_min, t_pred].
std::vector<ActionTuple> predict(const Policy& policy, const Observation& obs);

}  // namespace dpanther
