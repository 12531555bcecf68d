#include "leap/nn/network.hpp"

#include <cmath>
#include <stdexcept>

namespace leap::nn {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  throw std::logic_error("unknown activation");
}

Activation activation_from_name(const std::string& name) {
  if (name == "none") return Activation::None;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation: " + name);
}

std::vector<int> NetworkSpec::layer_dims() const {
  std::vector<int> dims;
  dims.reserve(hidden_sizes.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_sizes.begin(), hidden_sizes.end());
  dims.push_back(output_dim);
  return dims;
}

void validate_spec(const NetworkSpec& spec) {
  if (spec.input_dim <= 0 || spec.output_dim <= 0)
    throw std::invalid_argument("network dims must be positive");
  for (int h : spec.hidden_sizes)
    if (h <= 0) throw std::invalid_argument("hidden sizes must be positive");
  if (spec.hidden_activation != Activation::Relu)
    throw std::invalid_argument("hidden activation must be relu");
  if (spec.output_activation == Activation::Relu)
    throw std::invalid_argument("output activation must be none or tanh");
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) n += static_cast<std::size_t>(b.size());
  return n;
}

NetworkParams init_network(const NetworkSpec& spec, Rng& rng) {
  validate_spec(spec);
  NetworkParams params;
  params.spec = spec;
  const auto dims = spec.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = dist(rng);
    Eigen::VectorXd b(fan_out);
    for (int i = 0; i < fan_out; ++i) b(i) = dist(rng);
    params.weights.push_back(std::move(w));
    params.biases.push_back(std::move(b));
  }
  return params;
}

NetworkGrads zero_grads(const NetworkParams& params) {
  NetworkGrads grads;
  grads.weights.reserve(params.weights.size());
  grads.biases.reserve(params.biases.size());
  for (const auto& w : params.weights) grads.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : params.biases) grads.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  grads.input = Eigen::VectorXd::Zero(params.spec.input_dim);
  return grads;
}

namespace {

void check_input_dim(const NetworkParams& params, Eigen::Index rows) {
  if (rows != params.spec.input_dim)
    throw std::invalid_argument("input dimension mismatch: got " + std::to_string(rows) +
                                ", expected " + std::to_string(params.spec.input_dim));
}

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation act) {
  switch (act) {
    case Activation::None: return z;
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  throw std::logic_error("unknown activation");
}

}  // namespace

Eigen::VectorXd forward(const NetworkParams& params, const Eigen::VectorXd& input) {
  check_input_dim(params, input.size());
  Eigen::VectorXd a = input;
  const int last = static_cast<int>(params.weights.size()) - 1;
  for (int l = 0; l <= last; ++l) {
    Eigen::VectorXd z = params.weights[l] * a + params.biases[l];
    const Activation act = (l == last) ? params.spec.output_activation : params.spec.hidden_activation;
    a = apply_activation(z, act);
  }
  return a;
}

Eigen::MatrixXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& inputs) {
  check_input_dim(params, inputs.rows());
  Eigen::MatrixXd a = inputs;
  const int last = static_cast<int>(params.weights.size()) - 1;
  for (int l = 0; l <= last; ++l) {
    Eigen::MatrixXd z = (params.weights[l] * a).colwise() + params.biases[l];
    const Activation act = (l == last) ? params.spec.output_activation : params.spec.hidden_activation;
    a = apply_activation(z, act);
  }
  return a;
}

ForwardCache forward_cached(const NetworkParams& params, const Eigen::MatrixXd& inputs) {
  check_input_dim(params, inputs.rows());
  ForwardCache cache;
  cache.activations.push_back(inputs);
  const int last = static_cast<int>(params.weights.size()) - 1;
  for (int l = 0; l <= last; ++l) {
    Eigen::MatrixXd z = (params.weights[l] * cache.activations.back()).colwise() + params.biases[l];
    const Activation act = (l == last) ? params.spec.output_activation : params.spec.hidden_activation;
    cache.activations.push_back(apply_activation(z, act));
    cache.pre_activations.push_back(std::move(z));
  }
  return cache;
}

void backward(const NetworkParams& params, const ForwardCache& cache,
              const Eigen::MatrixXd& upstream, NetworkGrads& grads,
              Eigen::MatrixXd* input_grads) {
  const int last = static_cast<int>(params.weights.size()) - 1;
  if (upstream.rows() != params.spec.output_dim || upstream.cols() != cache.output().cols())
    throw std::invalid_argument("upstream shape mismatch");

  Eigen::MatrixXd delta;  // d loss / d pre_activation of current layer
  for (int l = last; l >= 0; --l) {
    if (l == last) {
      switch (params.spec.output_activation) {
        case Activation::None: delta = upstream; break;
        case Activation::Tanh:
          delta = upstream.cwiseProduct((1.0 - cache.activations[l + 1].array().square()).matrix());
          break;
        default: throw std::logic_error("bad output activation");
      }
    } else {
      Eigen::MatrixXd up = params.weights[l + 1].transpose() * delta;
      // relu': 1 for z > 0, 0 otherwise
      delta = up.cwiseProduct((cache.pre_activations[l].array() > 0.0).cast<double>().matrix());
    }
    grads.weights[l].noalias() += delta * cache.activations[l].transpose();
    grads.biases[l].noalias() += delta.rowwise().sum();
  }
  if (input_grads) {
    input_grads->noalias() = params.weights[0].transpose() * delta;
  }
}

NetworkGrads gradients(const NetworkParams& params, const Eigen::VectorXd& input,
                       const Eigen::VectorXd& upstream) {
  if (upstream.size() != params.spec.output_dim)
    throw std::invalid_argument("upstream dimension mismatch");
  ForwardCache cache = forward_cached(params, input);
  NetworkGrads grads = zero_grads(params);
  Eigen::MatrixXd input_grad(params.spec.input_dim, 1);
  backward(params, cache, upstream, grads, &input_grad);
  grads.input = input_grad.col(0);
  for (const auto& w : grads.weights)
    if (!w.allFinite()) throw std::runtime_error("non-finite gradient");
  if (!grads.input.allFinite()) throw std::runtime_error("non-finite input gradient");
  return grads;
}

}  // namespace leap::nn
