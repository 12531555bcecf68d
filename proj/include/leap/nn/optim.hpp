#pragma once

#include "leap/nn/network.hpp"

namespace leap::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  long step_count = 0;
  std::vector<Eigen::MatrixXd> weight_m, weight_v;
  std::vector<Eigen::VectorXd> bias_m, bias_v;
};

AdamState make_adam_state(const NetworkParams& params, AdamConfig config = {});

// Standard Adam with bias correction; increments state.step_count by 1.
void adam_step(NetworkParams& params, const NetworkGrads& grads, AdamState& state);

struct SgdConfig {
  double learning_rate = 0.01;
};

void sgd_step(NetworkParams& params, const NetworkGrads& grads, const SgdConfig& config);

struct RmsPropConfig {
  double learning_rate = 1e-3;
  double decay = 0.99;
  double epsilon = 1e-8;
};

struct RmsPropState {
  RmsPropConfig config;
  std::vector<Eigen::MatrixXd> weight_v;
  std::vector<Eigen::VectorXd> bias_v;
};

RmsPropState make_rmsprop_state(const NetworkParams& params, RmsPropConfig config = {});

void rmsprop_step(NetworkParams& params, const NetworkGrads& grads, RmsPropState& state);

// target <- (1 - tau) * target + tau * source, per parameter.
void soft_update(NetworkParams& target, const NetworkParams& source, double tau);

}  // namespace leap::nn
