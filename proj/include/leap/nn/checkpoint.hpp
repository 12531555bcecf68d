#pragma once

#include <nlohmann/json_fwd.hpp>

#include <string>

#include "leap/nn/network.hpp"

namespace leap::nn {

// Checkpoints are JSON: spec fields plus nested parameter arrays in row-major
// order. Doubles are serialized with shortest round-trip precision, so a
// saved network reproduces its outputs bit-exactly after loading.
nlohmann::json network_to_json(const NetworkParams& params);
NetworkParams network_from_json(const nlohmann::json& j);

void save_network(const std::string& path, const NetworkParams& params);
NetworkParams load_network(const std::string& path);

}  // namespace leap::nn
