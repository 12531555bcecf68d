#pragma once

#include <nlohmann/json.hpp>

#include "leap/env/nav2d.hpp"
#include "leap/planner/planner.hpp"
#include "leap/tdm/tdm.hpp"
#include "leap/vae/vae.hpp"

// nlohmann ADL hooks for the config types that appear in checkpoints and run
// manifests.

namespace leap::env {
void to_json(nlohmann::json& j, const WallRect& w);
void from_json(const nlohmann::json& j, WallRect& w);
void to_json(nlohmann::json& j, const Box& b);
void from_json(const nlohmann::json& j, Box& b);
void to_json(nlohmann::json& j, const EnvConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);
}  // namespace leap::env

namespace leap::tdm {
void to_json(nlohmann::json& j, const RelabelStrategy& s);
void from_json(const nlohmann::json& j, RelabelStrategy& s);
void to_json(nlohmann::json& j, const TdmConfig& c);
void from_json(const nlohmann::json& j, TdmConfig& c);
}  // namespace leap::tdm

namespace leap::vae {
void to_json(nlohmann::json& j, const VaeConfig& c);
void from_json(const nlohmann::json& j, VaeConfig& c);
}  // namespace leap::vae

namespace leap::planner {
void to_json(nlohmann::json& j, const CemConfig& c);
void from_json(const nlohmann::json& j, CemConfig& c);
void to_json(nlohmann::json& j, const GradConfig& c);
void from_json(const nlohmann::json& j, GradConfig& c);
void to_json(nlohmann::json& j, const PlannerConfig& c);
void from_json(const nlohmann::json& j, PlannerConfig& c);

std::string norm_name(PlanNorm n);
PlanNorm norm_from_name(const std::string& s);
std::string optimizer_name(PlanOptimizer o);
PlanOptimizer optimizer_from_name(const std::string& s);
}  // namespace leap::planner
