#include "leap/nn/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

namespace leap::nn {

using nlohmann::json;

json network_to_json(const NetworkParams& params) {
  json spec;
  spec["input_dim"] = params.spec.input_dim;
  spec["hidden_sizes"] = params.spec.hidden_sizes;
  spec["output_dim"] = params.spec.output_dim;
  spec["hidden_activation"] = activation_name(params.spec.hidden_activation);
  spec["output_activation"] = activation_name(params.spec.output_activation);

  json weights = json::array();
  for (const auto& w : params.weights) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < w.cols(); ++j) row.push_back(w(i, j));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
  }
  json biases = json::array();
  for (const auto& b : params.biases) {
    json vec = json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) vec.push_back(b(i));
    biases.push_back(std::move(vec));
  }

  return json{{"format", "leap-net-v1"}, {"spec", spec}, {"weights", weights}, {"biases", biases}};
}

NetworkParams network_from_json(const json& j) {
  if (j.value("format", "") != "leap-net-v1")
    throw std::runtime_error("unrecognized network checkpoint format");
  NetworkParams params;
  const auto& spec = j.at("spec");
  params.spec.input_dim = spec.at("input_dim").get<int>();
  params.spec.hidden_sizes = spec.at("hidden_sizes").get<std::vector<int>>();
  params.spec.output_dim = spec.at("output_dim").get<int>();
  params.spec.hidden_activation = activation_from_name(spec.at("hidden_activation").get<std::string>());
  params.spec.output_activation = activation_from_name(spec.at("output_activation").get<std::string>());
  validate_spec(params.spec);

  const auto dims = params.spec.layer_dims();
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != dims.size() - 1 || biases.size() != dims.size() - 1)
    throw std::runtime_error("checkpoint layer count mismatch");
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int fan_in = dims[l];
    const int fan_out = dims[l + 1];
    const auto& wj = weights.at(l);
    if (static_cast<int>(wj.size()) != fan_out) throw std::runtime_error("checkpoint weight shape mismatch");
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i) {
      const auto& row = wj.at(i);
      if (static_cast<int>(row.size()) != fan_in) throw std::runtime_error("checkpoint weight shape mismatch");
      for (int c = 0; c < fan_in; ++c) w(i, c) = row.at(c).get<double>();
    }
    const auto& bj = biases.at(l);
    if (static_cast<int>(bj.size()) != fan_out) throw std::runtime_error("checkpoint bias shape mismatch");
    Eigen::VectorXd b(fan_out);
    for (int i = 0; i < fan_out; ++i) b(i) = bj.at(i).get<double>();
    if (!w.allFinite() || !b.allFinite()) throw std::runtime_error("checkpoint contains non-finite values");
    params.weights.push_back(std::move(w));
    params.biases.push_back(std::move(b));
  }
  return params;
}

void save_network(const std::string& path, const NetworkParams& params) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << network_to_json(params).dump();
  if (!out) throw std::runtime_error("failed writing " + path);
}

NetworkParams load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return network_from_json(j);
}

}  // namespace leap::nn
