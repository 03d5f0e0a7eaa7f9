#include "dpanther/student.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace dpanther {

namespace {

void check_range(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  if (!(hi.array() > lo.array()).all()) throw std::invalid_argument("normalizer range is empty");
}

void pad(Eigen::VectorXd& lo, Eigen::VectorXd& hi, double margin) {
  for (Eigen::Index k = 0; k < lo.size(); ++k) {
    const double width = hi(k) - lo(k);
    if (width <= 1e-12) {
      lo(k) -= 1.0;
      hi(k) += 1.0;
    } else {
      lo(k) -= margin * width;
      hi(k) += margin * width;
    }
  }
}

}  // namespace

Normalizer Normalizer::fit(std::span<const Demonstration> data, double t_min, double t_pred,
                           double margin) {
  if (data.empty()) throw std::invalid_argument("Normalizer::fit: empty dataset");
  if (!(t_min < t_pred)) throw std::invalid_argument("Normalizer::fit: t_min must be < t_pred");
  Normalizer n;
  n.obs_lo_ = Eigen::VectorXd::Constant(Observation::kSize, std::numeric_limits<double>::max());
  n.obs_hi_ = Eigen::VectorXd::Constant(Observation::kSize, std::numeric_limits<double>::lowest());
  n.act_lo_ = Eigen::VectorXd::Constant(12, std::numeric_limits<double>::max());
  n.act_hi_ = Eigen::VectorXd::Constant(12, std::numeric_limits<double>::lowest());
  bool any_action = false;
  for (const auto& d : data) {
    const Observation::Vector x = d.obs.flatten();
    n.obs_lo_ = n.obs_lo_.cwiseMin(x);
    n.obs_hi_ = n.obs_hi_.cwiseMax(x);
    for (const auto& a : d.actions) {
      const Eigen::VectorXd y = a.flatten().head<12>();
      n.act_lo_ = n.act_lo_.cwiseMin(y);
      n.act_hi_ = n.act_hi_.cwiseMax(y);
      any_action = true;
    }
  }
  if (!any_action) throw std::invalid_argument("Normalizer::fit: dataset has no actions");
  pad(n.obs_lo_, n.obs_hi_, margin);
  pad(n.act_lo_, n.act_hi_, margin);
  n.t_lo_ = t_min;
  n.t_hi_ = t_pred;
  return n;
}

Observation::Vector Normalizer::normalize_observation(const Observation& obs) const {
  if (!fitted()) throw std::logic_error("normalizer is not fitted");
  const Observation::Vector x = obs.flatten();
  if (!x.allFinite()) throw std::invalid_argument("non-finite observation");
  return (2.0 * (x - obs_lo_).array() / (obs_hi_ - obs_lo_).array() - 1.0).matrix();
}

ActionTuple::Vector Normalizer::normalize_action(const ActionTuple& action) const {
  if (!fitted()) throw std::logic_error("normalizer is not fitted");
  const ActionTuple::Vector y = action.flatten();
  ActionTuple::Vector out;
  out.head<12>() = 2.0 * (y.head<12>() - act_lo_).array() / (act_hi_ - act_lo_).array() - 1.0;
  out(12) = 2.0 * (y(12) - t_lo_) / (t_hi_ - t_lo_) - 1.0;
  return out;
}

ActionTuple Normalizer::denormalize_action(const ActionTuple::Vector& x) const {
  if (!fitted()) throw std::logic_error("normalizer is not fitted");
  ActionTuple::Vector y;
  y.head<12>() = act_lo_.array() + (x.head<12>().array() + 1.0) * 0.5 * (act_hi_ - act_lo_).array();
  y(12) = t_lo_ + (x(12) + 1.0) * 0.5 * (t_hi_ - t_lo_);
  return ActionTuple::unflatten(y);
}

Normalizer::Ranges Normalizer::ranges() const {
  return {obs_lo_, obs_hi_, act_lo_, act_hi_, t_lo_, t_hi_};
}

Normalizer Normalizer::from_ranges(const Ranges& r) {
  if (r.obs_lo.size() != Observation::kSize || r.obs_hi.size() != Observation::kSize ||
      r.act_lo.size() != 12 || r.act_hi.size() != 12) {
    throw std::invalid_argument("Normalizer::from_ranges: wrong sizes");
  }
  check_range(r.obs_lo, r.obs_hi);
  check_range(r.act_lo, r.act_hi);
  if (!(r.t_min < r.t_pred)) throw std::invalid_argument("Normalizer::from_ranges: bad T range");
  Normalizer n;
  n.obs_lo_ = r.obs_lo;
  n.obs_hi_ = r.obs_hi;
  n.act_lo_ = r.act_lo;
  n.act_hi_ = r.act_hi;
  n.t_lo_ = r.t_min;
  n.t_hi_ = r.t_pred;
  return n;
}

PolicyParams PolicyParams::zeros(std::vector<int> layer_sizes) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("network needs at least two layer sizes");
  Eigen::Index count = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    if (layer_sizes[l] < 1 || layer_sizes[l + 1] < 1) {
      throw std::invalid_argument("layer sizes must be positive");
    }
    count += static_cast<Eigen::Index>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
  }
  return {std::move(layer_sizes), Eigen::VectorXd::Zero(count)};
}

PolicyParams PolicyParams::random(std::vector<int> layer_sizes, std::uint64_t seed) {
  PolicyParams p = zeros(std::move(layer_sizes));
  std::mt19937_64 rng(seed);
  for (int l = 0; l < p.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.layer_sizes[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const Eigen::Index begin = p.weight_offset(l);
    const Eigen::Index end = p.bias_offset(l) + p.layer_sizes[l + 1];
    for (Eigen::Index k = begin; k < end; ++k) p.theta(k) = dist(rng);
  }
  return p;
}

Eigen::Index PolicyParams::weight_offset(int layer) const {
  if (layer < 0 || layer >= num_layers()) throw std::out_of_range("layer index out of range");
  Eigen::Index offset = 0;
  for (int l = 0; l < layer; ++l) {
    offset += static_cast<Eigen::Index>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
  }
  return offset;
}

Eigen::Index PolicyParams::bias_offset(int layer) const {
  return weight_offset(layer) + static_cast<Eigen::Index>(layer_sizes[layer + 1]) * layer_sizes[layer];
}

PolicyParams::RowMajorMap PolicyParams::weight(int layer) const {
  return RowMajorMap(theta.data() + weight_offset(layer), layer_sizes[layer + 1],
                     layer_sizes[layer]);
}

Eigen::Map<const Eigen::VectorXd> PolicyParams::bias(int layer) const {
  return Eigen::Map<const Eigen::VectorXd>(theta.data() + bias_offset(layer),
                                           layer_sizes[layer + 1]);
}

std::vector<int> student_architecture(int n_s, int hidden, int hidden_layers) {
  if (n_s < 1 || hidden < 1 || hidden_layers < 0) {
    throw std::invalid_argument("student_architecture: sizes must be positive");
  }
  std::vector<int> sizes{Observation::kSize};
  for (int l = 0; l < hidden_layers; ++l) sizes.push_back(hidden);
  sizes.push_back(ActionTuple::kSize * n_s);
  return sizes;
}

namespace {

struct ForwardPass {
  std::vector<Eigen::MatrixXd> activations;  // inputs to every layer, then the output
};

ForwardPass forward_pass(const PolicyParams& params, const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != params.input_size()) throw std::invalid_argument("forward: input size");
  if (!inputs.allFinite()) throw std::invalid_argument("forward: non-finite input");
  ForwardPass pass;
  pass.activations.push_back(inputs);
  for (int l = 0; l < params.num_layers(); ++l) {
    Eigen::MatrixXd z = params.weight(l) * pass.activations.back();
    z.colwise() += params.bias(l);
    if (l + 1 < params.num_layers()) z = z.cwiseMax(0.0);
    pass.activations.push_back(std::move(z));
  }
  return pass;
}

}  // namespace

Eigen::MatrixXd forward(const PolicyParams& params, const Eigen::MatrixXd& inputs) {
  return forward_pass(params, inputs).activations.back();
}

Eigen::VectorXd forward(const PolicyParams& params, const Eigen::VectorXd& input) {
  return forward(params, Eigen::MatrixXd(input)).col(0);
}

NormalizedDemo normalize_demo(const Demonstration& demo, const Normalizer& normalizer) {
  NormalizedDemo out;
  out.obs = normalizer.normalize_observation(demo.obs);
  for (const auto& a : demo.actions) out.actions.push_back(normalizer.normalize_action(a));
  return out;
}

std::vector<ActionTuple::Vector> split_heads(const Eigen::VectorXd& output) {
  if (output.size() % ActionTuple::kSize != 0) {
    throw std::invalid_argument("split_heads: output size is not a multiple of 13");
  }
  std::vector<ActionTuple::Vector> heads(output.size() / ActionTuple::kSize);
  for (std::size_t j = 0; j < heads.size(); ++j) {
    heads[j] = output.segment<ActionTuple::kSize>(ActionTuple::kSize * j);
  }
  return heads;
}

namespace {

// Loss and output gradient of a batch; `assignment_for` returns the matrix
// used for sample b given its cost matrices.
template <typename AssignmentFn>
LossAndGradient batch_loss(const PolicyParams& params, std::span<const NormalizedDemo* const> batch,
                           const LossConfig& cfg, AssignmentFn assignment_for) {
  if (batch.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
  const auto n_batch = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd inputs(params.input_size(), n_batch);
  for (Eigen::Index b = 0; b < n_batch; ++b) inputs.col(b) = batch[b]->obs;
  ForwardPass pass = forward_pass(params, inputs);
  const Eigen::MatrixXd& outputs = pass.activations.back();
  const int n_s = params.output_size() / ActionTuple::kSize;

  LossAndGradient out;
  Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(outputs.rows(), n_batch);
  for (Eigen::Index b = 0; b < n_batch; ++b) {
    const NormalizedDemo& demo = *batch[b];
    const int n_e = static_cast<int>(demo.actions.size());
    if (n_e < 1 || n_e > n_s) throw std::invalid_argument("demonstration needs 1 <= n_e <= n_s");
    const std::vector<ActionTuple::Vector> heads = split_heads(outputs.col(b));
    const CostMatrices d = cost_matrices(demo.actions, heads);
    const Eigen::MatrixXd a = assignment_for(b, d);
    const LossValue value = assignment_loss(a, d, cfg.beta_p, cfg.beta_t);
    out.loss += value.loss;
    for (int j = 0; j < n_s; ++j) {
      ActionTuple::Vector g = ActionTuple::Vector::Zero();
      for (int i = 0; i < n_e; ++i) {
        const ActionTuple::Vector diff = heads[j] - demo.actions[i];
        g.head<12>() += value.d_loss_d_p(i, j) * (2.0 / 12.0) * diff.head<12>();
        g(12) += value.d_loss_d_t(i, j) * 2.0 * diff(12);
      }
      d_out.block<ActionTuple::kSize, 1>(ActionTuple::kSize * j, b) = g;
    }
  }
  out.loss /= static_cast<double>(n_batch);
  d_out /= static_cast<double>(n_batch);

  out.gradient = Eigen::VectorXd::Zero(params.num_parameters());
  Eigen::MatrixXd delta = std::move(d_out);
  for (int l = params.num_layers() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = pass.activations[l];
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<RowMajor>(out.gradient.data() + params.weight_offset(l), params.layer_sizes[l + 1],
                         params.layer_sizes[l]) = delta * input.transpose();
    out.gradient.segment(params.bias_offset(l), params.layer_sizes[l + 1]) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = params.weight(l).transpose() * delta;
      // The layer input is a ReLU output, positive exactly where it passed.
      delta = back.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

}  // namespace

LossAndGradient loss_and_gradient(const PolicyParams& params,
                                  std::span<const NormalizedDemo* const> batch,
                                  const LossConfig& cfg) {
  return batch_loss(params, batch, cfg, [&](Eigen::Index, const CostMatrices& d) {
    return assign(d.d_p, cfg.variant, cfg.eps);
  });
}

LossAndGradient loss_and_gradient(const PolicyParams& params, std::span<const NormalizedDemo> batch,
                                  const LossConfig& cfg) {
  std::vector<const NormalizedDemo*> pointers;
  for (const auto& d : batch) pointers.push_back(&d);
  return loss_and_gradient(params, std::span<const NormalizedDemo* const>(pointers), cfg);
}

LossAndGradient loss_and_gradient_fixed(const PolicyParams& params,
                                        std::span<const NormalizedDemo> batch,
                                        std::span<const Eigen::MatrixXd> assignments,
                                        const LossConfig& cfg) {
  if (assignments.size() != batch.size()) {
    throw std::invalid_argument("loss_and_gradient_fixed: one assignment per demonstration");
  }
  std::vector<const NormalizedDemo*> pointers;
  for (const auto& d : batch) pointers.push_back(&d);
  return batch_loss(params, std::span<const NormalizedDemo* const>(pointers), cfg,
                    [&](Eigen::Index b, const CostMatrices& d) {
                      const Eigen::MatrixXd& a = assignments[b];
                      if (a.rows() != d.d_p.rows() || a.cols() != d.d_p.cols()) {
                        throw std::invalid_argument("assignment shape mismatch");
                      }
                      return a;
                    });
}

void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& gradient, AdamState& state,
               double lr) {
  if (gradient.size() != theta.size()) throw std::invalid_argument("adam_step: size mismatch");
  if (!gradient.allFinite()) throw std::invalid_argument("adam_step: non-finite gradient");
  if (state.m.size() != theta.size()) {
    state.m = Eigen::VectorXd::Zero(theta.size());
    state.v = Eigen::VectorXd::Zero(theta.size());
    state.step = 0;
  }
  ++state.step;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * gradient;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  theta.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

TrainResult train(std::span<const Demonstration> data, const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw std::invalid_argument("train: bad schedule");
  TrainResult result;
  result.policy.normalizer = Normalizer::fit(data, cfg.t_min, cfg.t_pred);
  std::vector<NormalizedDemo> demos;
  demos.reserve(data.size());
  for (const auto& d : data) demos.push_back(normalize_demo(d, result.policy.normalizer));

  std::mt19937_64 rng(cfg.seed);
  result.policy.params = PolicyParams::random(student_architecture(cfg.n_s), rng());
  AdamState adam;
  std::vector<std::size_t> order(demos.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const NormalizedDemo*> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(&demos[order[k]]);
      const LossAndGradient lg = loss_and_gradient(result.policy.params, batch, cfg.loss);
      epoch_loss += lg.loss * static_cast<double>(stop - start);
      adam_step(result.policy.params.theta, lg.gradient, adam, cfg.lr);
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(demos.size()));
  }
  return result;
}

std::vector<ActionTuple> predict(const Policy& policy, const Observation& obs) {
  const Observation::Vector x = policy.normalizer.normalize_observation(obs);
  const Eigen::VectorXd y = forward(policy.params, Eigen::VectorXd(x));
  std::vector<ActionTuple> out;
  for (const auto& head : split_heads(y)) {
    ActionTuple a = policy.normalizer.denormalize_action(head);
    a.total_time = std::clamp(a.total_time, policy.normalizer.t_min(), policy.normalizer.t_pred());
    out.push_back(a);
  }
  return out;
}

}  // namespace dpanther
