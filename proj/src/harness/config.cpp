#include "leap/harness/config.hpp"

#include <fstream>
#include <stdexcept>

namespace leap::harness {

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("seeds must be nonempty");
  if (budget_steps < 0 || vae_steps < 0) throw std::invalid_argument("budgets must be >= 0");
  if (budget_steps > 0 && eval_interval > budget_steps)
    throw std::invalid_argument("budget must be >= eval_interval");
  if (eval_episodes < 1) throw std::invalid_argument("eval_episodes must be >= 1");
  if (dataset_size < 1000) throw std::invalid_argument("dataset_size must be >= 1000");
  if (vae_seeds < 1) throw std::invalid_argument("vae_seeds must be >= 1");
  tdm.validate();
  planner.validate();
  if (planner.latent_dim != vae.latent_dim)
    throw std::invalid_argument("planner latent_dim must match the VAE latent_dim");
}

tdm::TdmConfig ExperimentConfig::resolved_tdm() const {
  tdm::TdmConfig c = tdm;
  c.eval_interval = eval_interval;
  c.t_max = env.horizon;
  return c;
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"env", c.env},
                     {"tdm", c.tdm},
                     {"vae", c.vae},
                     {"planner", c.planner},
                     {"seeds", c.seeds},
                     {"budget_steps", c.budget_steps},
                     {"vae_steps", c.vae_steps},
                     {"dataset_size", c.dataset_size},
                     {"vae_seeds", c.vae_seeds},
                     {"eval_interval", c.eval_interval},
                     {"eval_episodes", c.eval_episodes},
                     {"hard_eval", c.hard_eval}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  j.at("env").get_to(c.env);
  j.at("tdm").get_to(c.tdm);
  j.at("vae").get_to(c.vae);
  j.at("planner").get_to(c.planner);
  j.at("seeds").get_to(c.seeds);
  j.at("budget_steps").get_to(c.budget_steps);
  j.at("vae_steps").get_to(c.vae_steps);
  j.at("dataset_size").get_to(c.dataset_size);
  j.at("vae_seeds").get_to(c.vae_seeds);
  j.at("eval_interval").get_to(c.eval_interval);
  j.at("eval_episodes").get_to(c.eval_episodes);
  j.at("hard_eval").get_to(c.hard_eval);
}

ExperimentConfig nav2d_preset() {
  ExperimentConfig c;
  c.env = env::EnvConfig::nav2d_default();
  c.tdm = tdm::TdmConfig{};            // Table-1 values
  c.vae = vae::VaeConfig{};
  c.vae.kl_weight = 0.05;              // desk-scale manifold/reconstruction balance
  c.planner = planner::PlannerConfig{};
  c.planner.k = 3;
  c.planner.lambda = 0.1;
  c.planner.latent_dim = c.vae.latent_dim;
  return c;
}

ExperimentConfig preset_by_name(const std::string& name) {
  if (name == "nav2d") return nav2d_preset();
  throw std::invalid_argument("unknown preset: " + name + " (available: nav2d)");
}

ExperimentConfig resolve_config(const std::string& preset, const std::string& config_path) {
  ExperimentConfig base = preset_by_name(preset.empty() ? "nav2d" : preset);
  if (config_path.empty()) {
    base.validate();
    return base;
  }
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config file: " + config_path);
  nlohmann::json patch;
  try {
    in >> patch;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed config file " + config_path + ": " + e.what());
  }
  nlohmann::json merged = base;
  merged.merge_patch(patch);
  ExperimentConfig out;
  try {
    out = merged.get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("invalid config values in " + config_path + ": " + e.what());
  }
  out.validate();
  return out;
}

}  // namespace leap::harness
