#include "leap/common/serialize.hpp"

namespace leap::env {

void to_json(nlohmann::json& j, const WallRect& w) {
  j = nlohmann::json{{"x0", w.x0}, {"y0", w.y0}, {"x1", w.x1}, {"y1", w.y1}};
}
void from_json(const nlohmann::json& j, WallRect& w) {
  j.at("x0").get_to(w.x0);
  j.at("y0").get_to(w.y0);
  j.at("x1").get_to(w.x1);
  j.at("y1").get_to(w.y1);
}

void to_json(nlohmann::json& j, const Box& b) {
  j = nlohmann::json{{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}};
}
void from_json(const nlohmann::json& j, Box& b) {
  j.at("x0").get_to(b.x0);
  j.at("y0").get_to(b.y0);
  j.at("x1").get_to(b.x1);
  j.at("y1").get_to(b.y1);
}

void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = nlohmann::json{{"room_side", c.room_side},
                     {"wall_thickness", c.wall_thickness},
                     {"agent_radius", c.agent_radius},
                     {"max_step", c.max_step},
                     {"horizon", c.horizon},
                     {"walls", c.walls},
                     {"center_box", c.center_box},
                     {"goal_band", c.goal_band},
                     {"wall_bottom_y", c.wall_bottom_y}};
}
void from_json(const nlohmann::json& j, EnvConfig& c) {
  c = EnvConfig::nav2d_default();
  j.at("room_side").get_to(c.room_side);
  j.at("wall_thickness").get_to(c.wall_thickness);
  j.at("agent_radius").get_to(c.agent_radius);
  j.at("max_step").get_to(c.max_step);
  j.at("horizon").get_to(c.horizon);
  j.at("walls").get_to(c.walls);
  j.at("center_box").get_to(c.center_box);
  j.at("goal_band").get_to(c.goal_band);
  j.at("wall_bottom_y").get_to(c.wall_bottom_y);
}

}  // namespace leap::env

namespace leap::tdm {

void to_json(nlohmann::json& j, const RelabelStrategy& s) {
  j = nlohmann::json{{"original", s.original}, {"buffer_random", s.buffer_random}, {"future", s.future}};
}
void from_json(const nlohmann::json& j, RelabelStrategy& s) {
  j.at("original").get_to(s.original);
  j.at("buffer_random").get_to(s.buffer_random);
  j.at("future").get_to(s.future);
}

void to_json(nlohmann::json& j, const TdmConfig& c) {
  j = nlohmann::json{{"t_max", c.t_max},
                     {"batch_size", c.batch_size},
                     {"epsilon_greedy", c.epsilon_greedy},
                     {"tau", c.tau},
                     {"q_output_mode", c.q_output_mode == QOutputMode::Scalar ? "scalar" : "per_dimension"},
                     {"policy_delay", c.policy_delay},
                     {"updates_per_step", c.updates_per_step},
                     {"hidden_sizes", c.hidden_sizes},
                     {"learning_rate", c.learning_rate},
                     {"replay_capacity", c.replay_capacity},
                     {"relabel", c.relabel},
                     {"eval_interval", c.eval_interval},
                     {"eval_episodes", c.eval_episodes}};
}
void from_json(const nlohmann::json& j, TdmConfig& c) {
  j.at("t_max").get_to(c.t_max);
  j.at("batch_size").get_to(c.batch_size);
  j.at("epsilon_greedy").get_to(c.epsilon_greedy);
  j.at("tau").get_to(c.tau);
  const auto mode = j.at("q_output_mode").get<std::string>();
  if (mode == "scalar") {
    c.q_output_mode = QOutputMode::Scalar;
  } else if (mode == "per_dimension") {
    c.q_output_mode = QOutputMode::PerDimension;
  } else {
    throw std::invalid_argument("unknown q_output_mode: " + mode);
  }
  j.at("policy_delay").get_to(c.policy_delay);
  j.at("updates_per_step").get_to(c.updates_per_step);
  j.at("hidden_sizes").get_to(c.hidden_sizes);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("replay_capacity").get_to(c.replay_capacity);
  j.at("relabel").get_to(c.relabel);
  j.at("eval_interval").get_to(c.eval_interval);
  j.at("eval_episodes").get_to(c.eval_episodes);
}

}  // namespace leap::tdm

namespace leap::vae {

void to_json(nlohmann::json& j, const VaeConfig& c) {
  j = nlohmann::json{{"obs_dim", c.obs_dim},
                     {"latent_dim", c.latent_dim},
                     {"hidden_sizes", c.hidden_sizes},
                     {"kl_weight", c.kl_weight},
                     {"learning_rate", c.learning_rate},
                     {"batch_size", c.batch_size},
                     {"logvar_min", c.logvar_min},
                     {"logvar_max", c.logvar_max},
                     {"holdout_fraction", c.holdout_fraction}};
}
void from_json(const nlohmann::json& j, VaeConfig& c) {
  j.at("obs_dim").get_to(c.obs_dim);
  j.at("latent_dim").get_to(c.latent_dim);
  j.at("hidden_sizes").get_to(c.hidden_sizes);
  j.at("kl_weight").get_to(c.kl_weight);
  j.at("learning_rate").get_to(c.learning_rate);
  j.at("batch_size").get_to(c.batch_size);
  j.at("logvar_min").get_to(c.logvar_min);
  j.at("logvar_max").get_to(c.logvar_max);
  j.at("holdout_fraction").get_to(c.holdout_fraction);
}

}  // namespace leap::vae

namespace leap::planner {

std::string norm_name(PlanNorm n) { return n == PlanNorm::LInf ? "linf" : "l1"; }
PlanNorm norm_from_name(const std::string& s) {
  if (s == "linf" || s == "l_inf") return PlanNorm::LInf;
  if (s == "l1") return PlanNorm::L1;
  throw std::invalid_argument("unknown norm: " + s);
}

std::string optimizer_name(PlanOptimizer o) {
  switch (o) {
    case PlanOptimizer::Cem: return "cem";
    case PlanOptimizer::Adam: return "adam";
    case PlanOptimizer::Sgd: return "sgd";
    case PlanOptimizer::RmsProp: return "rmsprop";
  }
  throw std::logic_error("unknown optimizer");
}
PlanOptimizer optimizer_from_name(const std::string& s) {
  if (s == "cem") return PlanOptimizer::Cem;
  if (s == "adam") return PlanOptimizer::Adam;
  if (s == "sgd") return PlanOptimizer::Sgd;
  if (s == "rmsprop") return PlanOptimizer::RmsProp;
  throw std::invalid_argument("unknown optimizer: " + s);
}

void to_json(nlohmann::json& j, const CemConfig& c) {
  j = nlohmann::json{{"population", c.population},
                     {"elite_frac", c.elite_frac},
                     {"iterations", c.iterations},
                     {"two_phase", c.two_phase},
                     {"elite_frac_early", c.elite_frac_early},
                     {"elite_frac_late", c.elite_frac_late},
                     {"min_variance", c.min_variance}};
}
void from_json(const nlohmann::json& j, CemConfig& c) {
  j.at("population").get_to(c.population);
  j.at("elite_frac").get_to(c.elite_frac);
  j.at("iterations").get_to(c.iterations);
  j.at("two_phase").get_to(c.two_phase);
  j.at("elite_frac_early").get_to(c.elite_frac_early);
  j.at("elite_frac_late").get_to(c.elite_frac_late);
  j.at("min_variance").get_to(c.min_variance);
}

void to_json(nlohmann::json& j, const GradConfig& c) {
  j = nlohmann::json{{"steps", c.steps},
                     {"adam_lr", c.adam_lr},
                     {"sgd_lr", c.sgd_lr},
                     {"rmsprop_lr", c.rmsprop_lr}};
}
void from_json(const nlohmann::json& j, GradConfig& c) {
  j.at("steps").get_to(c.steps);
  j.at("adam_lr").get_to(c.adam_lr);
  j.at("sgd_lr").get_to(c.sgd_lr);
  j.at("rmsprop_lr").get_to(c.rmsprop_lr);
}

void to_json(nlohmann::json& j, const PlannerConfig& c) {
  j = nlohmann::json{{"k", c.k},
                     {"latent_dim", c.latent_dim},
                     {"lambda", c.lambda},
                     {"norm", norm_name(c.norm)},
                     {"optimizer", optimizer_name(c.optimizer)},
                     {"cem", c.cem},
                     {"grad", c.grad}};
}
void from_json(const nlohmann::json& j, PlannerConfig& c) {
  j.at("k").get_to(c.k);
  j.at("latent_dim").get_to(c.latent_dim);
  j.at("lambda").get_to(c.lambda);
  c.norm = norm_from_name(j.at("norm").get<std::string>());
  c.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
  j.at("cem").get_to(c.cem);
  j.at("grad").get_to(c.grad);
}

}  // namespace leap::planner
