#include "leap/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace leap::nn {

namespace {

void check_shapes(const NetworkParams& params, const NetworkGrads& grads) {
  if (grads.weights.size() != params.weights.size() || grads.biases.size() != params.biases.size())
    throw std::invalid_argument("gradient layer count mismatch");
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    if (grads.weights[l].rows() != params.weights[l].rows() ||
        grads.weights[l].cols() != params.weights[l].cols() ||
        grads.biases[l].size() != params.biases[l].size())
      throw std::invalid_argument("gradient shape mismatch at layer " + std::to_string(l));
  }
}

}  // namespace

AdamState make_adam_state(const NetworkParams& params, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (const auto& w : params.weights) {
    state.weight_m.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    state.weight_v.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : params.biases) {
    state.bias_m.push_back(Eigen::VectorXd::Zero(b.size()));
    state.bias_v.push_back(Eigen::VectorXd::Zero(b.size()));
  }
  return state;
}

void adam_step(NetworkParams& params, const NetworkGrads& grads, AdamState& state) {
  check_shapes(params, grads);
  const auto& c = state.config;
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step_count));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    auto& m = state.weight_m[l];
    auto& v = state.weight_v[l];
    m = c.beta1 * m + (1.0 - c.beta1) * grads.weights[l];
    v = c.beta2 * v.array() + (1.0 - c.beta2) * grads.weights[l].array().square();
    params.weights[l].array() -=
        c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.epsilon);

    auto& mb = state.bias_m[l];
    auto& vb = state.bias_v[l];
    mb = c.beta1 * mb + (1.0 - c.beta1) * grads.biases[l];
    vb = c.beta2 * vb.array() + (1.0 - c.beta2) * grads.biases[l].array().square();
    params.biases[l].array() -=
        c.learning_rate * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + c.epsilon);
  }
}

void sgd_step(NetworkParams& params, const NetworkGrads& grads, const SgdConfig& config) {
  check_shapes(params, grads);
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    params.weights[l] -= config.learning_rate * grads.weights[l];
    params.biases[l] -= config.learning_rate * grads.biases[l];
  }
}

RmsPropState make_rmsprop_state(const NetworkParams& params, RmsPropConfig config) {
  RmsPropState state;
  state.config = config;
  for (const auto& w : params.weights) state.weight_v.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : params.biases) state.bias_v.push_back(Eigen::VectorXd::Zero(b.size()));
  return state;
}

void rmsprop_step(NetworkParams& params, const NetworkGrads& grads, RmsPropState& state) {
  check_shapes(params, grads);
  const auto& c = state.config;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    auto& v = state.weight_v[l];
    v = c.decay * v.array() + (1.0 - c.decay) * grads.weights[l].array().square();
    params.weights[l].array() -=
        c.learning_rate * grads.weights[l].array() / (v.array().sqrt() + c.epsilon);

    auto& vb = state.bias_v[l];
    vb = c.decay * vb.array() + (1.0 - c.decay) * grads.biases[l].array().square();
    params.biases[l].array() -=
        c.learning_rate * grads.biases[l].array() / (vb.array().sqrt() + c.epsilon);
  }
}

void soft_update(NetworkParams& target, const NetworkParams& source, double tau) {
  if (!(target.spec == source.spec)) throw std::invalid_argument("soft_update spec mismatch");
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must be in [0, 1]");
  for (std::size_t l = 0; l < target.weights.size(); ++l) {
    target.weights[l] = (1.0 - tau) * target.weights[l] + tau * source.weights[l];
    target.biases[l] = (1.0 - tau) * target.biases[l] + tau * source.biases[l];
  }
}

}  // namespace leap::nn
