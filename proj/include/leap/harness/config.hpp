#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "leap/common/serialize.hpp"

namespace leap::harness {

struct ExperimentConfig {
  env::EnvConfig env = env::EnvConfig::nav2d_default();
  tdm::TdmConfig tdm;
  vae::VaeConfig vae;
  planner::PlannerConfig planner;
  std::vector<unsigned long> seeds{0, 1, 2};
  long budget_steps = 100000;   // TDM environment steps
  long vae_steps = 60000;
  int dataset_size = 20000;
  int vae_seeds = 3;            // best-of selection by holdout loss
  int eval_interval = 5000;
  int eval_episodes = 20;
  bool hard_eval = true;

  void validate() const;
  // pushes the experiment-level evaluation cadence into the tdm config
  tdm::TdmConfig resolved_tdm() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

// nav2d defaults from the cited hyperparameter tables; the VAE KL weight is
// the desk-scale value (see README).
ExperimentConfig nav2d_preset();

ExperimentConfig preset_by_name(const std::string& name);

// preset + JSON merge-patch from an optional config file
ExperimentConfig resolve_config(const std::string& preset, const std::string& config_path);

}  // namespace leap::harness
