#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

namespace leap::nn {

using Rng = std::mt19937_64;

enum class Activation { None, Relu, Tanh };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct NetworkSpec {
  int input_dim = 0;
  std::vector<int> hidden_sizes;
  int output_dim = 0;
  Activation hidden_activation = Activation::Relu;
  Activation output_activation = Activation::None;

  // [input_dim, hidden..., output_dim]
  std::vector<int> layer_dims() const;
  int num_layers() const { return static_cast<int>(hidden_sizes.size()) + 1; }
  bool operator==(const NetworkSpec&) const = default;
};

void validate_spec(const NetworkSpec& spec);

// Flat parameter store; weights[l] has shape (fan_out x fan_in).
struct NetworkParams {
  NetworkSpec spec;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  std::size_t parameter_count() const;
};

struct NetworkGrads {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input;
};

// Per-layer activations of a batched forward pass (columns are samples).
// activations[0] is the input, activations.back() the network output.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;
  std::vector<Eigen::MatrixXd> pre_activations;
  const Eigen::MatrixXd& output() const { return activations.back(); }
};

// Uniform init in +-1/sqrt(fan_in) per layer.
NetworkParams init_network(const NetworkSpec& spec, Rng& rng);

NetworkGrads zero_grads(const NetworkParams& params);

Eigen::VectorXd forward(const NetworkParams& params, const Eigen::VectorXd& input);

// Batched forward; each column of `inputs` is one sample.
Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& inputs);
ForwardCache forward_cached(const NetworkParams& params, const Eigen::MatrixXd& inputs);

// Exact reverse-mode gradients of <upstream, forward(params, input)> with
// respect to every weight, bias, and the input. Throws on non-finite values.
NetworkGrads gradients(const NetworkParams& params, const Eigen::VectorXd& input,
                       const Eigen::VectorXd& upstream);

// Batched reverse pass over a cached forward. Parameter gradients are summed
// over the batch and accumulated into `grads` (caller zeroes/scales). When
// `input_grads` is non-null it receives d<upstream,output>/d input per column.
void backward(const NetworkParams& params, const ForwardCache& cache,
              const Eigen::MatrixXd& upstream, NetworkGrads& grads,
              Eigen::MatrixXd* input_grads = nullptr);

}  // namespace leap::nn
