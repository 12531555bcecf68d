#include "leap/harness/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "leap/harness/experiment.hpp"
#include "leap/nn/checkpoint.hpp"

namespace leap::harness {

namespace fs = std::filesystem;

namespace {

void write_states_csv(const std::string& path, const std::vector<env::NavState>& states) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "x,y\n";
  char buf[80];
  for (const auto& s : states) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", s.position.x(), s.position.y());
    out << buf;
  }
}

std::vector<env::NavState> read_states_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,y", 0) != 0)
    throw std::runtime_error("dataset file must start with an x,y header: " + path);
  std::vector<env::NavState> states;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double x, y;
    if (std::sscanf(line.c_str(), "%lf,%lf", &x, &y) != 2)
      throw std::runtime_error("bad dataset row: " + line);
    states.push_back(env::NavState{{x, y}});
  }
  return states;
}

struct CommonArgs {
  std::string preset = "nav2d";
  std::string config_path;
  std::string out_dir = "out";
  long seed = -1;  // overrides config.seeds[0] when >= 0

  void attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset, "config preset (nav2d)");
    cmd->add_option("--config", config_path, "JSON config file merged over the preset");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "seed override");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = resolve_config(preset, config_path);
    if (seed >= 0) cfg.seeds = {static_cast<unsigned long>(seed)};
    return cfg;
  }
  unsigned long first_seed(const ExperimentConfig& cfg) const { return cfg.seeds.front(); }
};

// Train the configured number of VAE seeds and keep the best by holdout loss.
vae::VaeTrainResult train_vae_best(const ExperimentConfig& cfg,
                                   const std::vector<env::NavState>& dataset, unsigned long seed,
                                   long steps, std::vector<double>* losses_out = nullptr) {
  std::vector<vae::VaeTrainResult> results;
  std::vector<double> losses;
  for (int i = 0; i < cfg.vae_seeds; ++i) {
    auto rng = make_rng(seed + i, 17);
    results.push_back(vae::train_vae(dataset, cfg.vae, steps, rng));
    losses.push_back(results.back().final_holdout_loss);
  }
  const int best = vae::select_best_seed(losses);
  if (losses_out) *losses_out = losses;
  return std::move(results[best]);
}

int cmd_collect_data(const CommonArgs& common, int n_override) {
  ExperimentConfig cfg = common.resolve();
  const unsigned long seed = common.first_seed(cfg);
  const int n = n_override > 0 ? n_override : cfg.dataset_size;
  auto rng = make_rng(seed, 11);
  auto states = env::sample_valid_states(rng, n, cfg.env);
  fs::create_directories(common.out_dir);
  write_states_csv(common.out_dir + "/states.csv", states);
  write_manifest(common.out_dir + "/manifest.json", "collect-data", cfg,
                 {{"seed", seed}, {"n", n}, {"outputs", {"states.csv"}}});
  std::printf("wrote %d valid states to %s/states.csv\n", n, common.out_dir.c_str());
  return 0;
}

int cmd_train_vae(const CommonArgs& common, const std::string& data_path, long steps_override) {
  ExperimentConfig cfg = common.resolve();
  const unsigned long seed = common.first_seed(cfg);
  const long steps = steps_override > 0 ? steps_override : cfg.vae_steps;

  std::vector<env::NavState> dataset;
  if (!data_path.empty()) {
    dataset = read_states_csv(data_path);
  } else {
    auto rng = make_rng(seed, 11);
    dataset = env::sample_valid_states(rng, cfg.dataset_size, cfg.env);
  }

  std::vector<double> losses;
  auto result = train_vae_best(cfg, dataset, seed, steps, &losses);

  fs::create_directories(common.out_dir);
  vae::save_vae(common.out_dir + "/vae.json", result.model);
  {
    std::ofstream log(common.out_dir + "/vae_log.csv");
    log << "step,loss,reconstruction,kl\n";
    char buf[160];
    for (const auto& r : result.log) {
      std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g\n", r.step, r.loss, r.reconstruction, r.kl);
      log << buf;
    }
  }
  write_manifest(common.out_dir + "/manifest.json", "train-vae", cfg,
                 {{"seed", seed},
                  {"steps", steps},
                  {"dataset", data_path.empty() ? "(sampled)" : data_path},
                  {"seed_holdout_losses", losses},
                  {"holdout_loss", result.final_holdout_loss},
                  {"holdout_mse", result.final_holdout_mse},
                  {"outputs", {"vae.json", "vae_log.csv"}}});
  std::printf("vae trained: holdout loss %.6f, holdout mse %.6f -> %s/vae.json\n",
              result.final_holdout_loss, result.final_holdout_mse, common.out_dir.c_str());
  return 0;
}

int cmd_train_tdm(const CommonArgs& common, long steps_override) {
  ExperimentConfig cfg = common.resolve();
  const unsigned long seed = common.first_seed(cfg);
  const long steps = steps_override > 0 ? steps_override : cfg.budget_steps;
  auto rng = make_rng(seed, 29);
  auto result = tdm::train(cfg.env, cfg.resolved_tdm(), steps, rng);

  fs::create_directories(common.out_dir);
  tdm::save_tdm(common.out_dir + "/tdm.json", result.nets);
  tdm::write_train_log_csv(common.out_dir + "/train_log.csv", result.log);
  write_manifest(common.out_dir + "/manifest.json", "train-tdm", cfg,
                 {{"seed", seed}, {"steps", steps}, {"outputs", {"tdm.json", "train_log.csv"}}});
  if (!result.log.empty())
    std::printf("tdm trained %ld steps: eval distance %.3f, hard success %.2f -> %s/tdm.json\n",
                steps, result.log.back().eval_distance_mean, result.log.back().eval_success_rate,
                common.out_dir.c_str());
  else
    std::printf("tdm trained %ld steps -> %s/tdm.json\n", steps, common.out_dir.c_str());
  return 0;
}

struct PlannerOverrides {
  int k = -1;
  double lambda = -1;
  std::string norm, optimizer;

  void attach(CLI::App* cmd) {
    cmd->add_option("--k", k, "number of subgoals (0 = greedy TDM baseline)");
    cmd->add_option("--lambda", lambda, "prior-likelihood penalty weight");
    cmd->add_option("--norm", norm, "feasibility norm: linf or l1");
    cmd->add_option("--optimizer", optimizer, "plan optimizer: cem, adam, sgd, rmsprop");
  }
  void apply(ExperimentConfig& cfg) const {
    if (k >= 0) cfg.planner.k = k;
    if (lambda >= 0) cfg.planner.lambda = lambda;
    if (!norm.empty()) cfg.planner.norm = planner::norm_from_name(norm);
    if (!optimizer.empty()) cfg.planner.optimizer = planner::optimizer_from_name(optimizer);
  }
};

int cmd_evaluate(const CommonArgs& common, const std::string& tdm_path, const std::string& vae_path,
                 const PlannerOverrides& pov, int episodes_override, bool save_episodes) {
  ExperimentConfig cfg = common.resolve();
  pov.apply(cfg);
  if (episodes_override > 0) cfg.eval_episodes = episodes_override;
  cfg.validate();

  auto nets = tdm::load_tdm(tdm_path);
  auto model = vae::load_vae(vae_path);
  const unsigned long seed = common.first_seed(cfg);
  auto result = evaluate(nets, model, cfg, seed, cfg.budget_steps);

  fs::create_directories(common.out_dir);
  write_metrics_csv(common.out_dir + "/metrics.csv", {result.hard, result.uniform});
  if (save_episodes) {
    for (std::size_t i = 0; i < result.hard_episodes.size(); ++i)
      planner::save_episode_json(common.out_dir + "/hard_episode_" + std::to_string(i) + ".json",
                                 result.hard_episodes[i]);
  }
  write_manifest(common.out_dir + "/manifest.json", "evaluate", cfg,
                 {{"seed", seed},
                  {"tdm", tdm_path},
                  {"vae", vae_path},
                  {"outputs", {"metrics.csv"}}});
  std::printf("%s", metrics_csv({result.hard, result.uniform}).c_str());
  return 0;
}

int cmd_ablate(const CommonArgs& common, const std::string& kind,
               const std::vector<std::string>& tdm_paths, const std::string& vae_path,
               int probes, int episodes) {
  ExperimentConfig cfg = common.resolve();
  cfg.validate();
  if (tdm_paths.empty()) throw std::runtime_error("ablate requires at least one --tdm checkpoint");
  auto model = vae::load_vae(vae_path);
  fs::create_directories(common.out_dir);

  if (kind == "norm") {
    std::vector<MetricsRow> rows;
    for (std::size_t i = 0; i < tdm_paths.size(); ++i) {
      auto nets = tdm::load_tdm(tdm_paths[i]);
      const unsigned long seed = cfg.seeds[i % cfg.seeds.size()];
      for (auto norm : {planner::PlanNorm::LInf, planner::PlanNorm::L1}) {
        ExperimentConfig arm = cfg;
        arm.planner.norm = norm;
        if (episodes > 0) arm.eval_episodes = episodes;
        auto res = evaluate(nets, model, arm, seed, cfg.budget_steps);
        rows.push_back(res.hard);
      }
    }
    write_metrics_csv(common.out_dir + "/norm_ablation.csv", rows);
    std::printf("%s", metrics_csv(rows).c_str());
  } else if (kind == "optimizer") {
    auto nets = tdm::load_tdm(tdm_paths.front());
    auto rows = optimizer_ablation(nets, model, cfg, probes, episodes, cfg.seeds.front());
    write_optimizer_ablation_csv(common.out_dir, rows);
    for (const auto& r : rows)
      std::printf("%-8s mean_final_loss %.4f success %.2f\n", r.optimizer.c_str(),
                  r.mean_final_loss, r.success_rate);
  } else if (kind == "lambda") {
    auto nets = tdm::load_tdm(tdm_paths.front());
    const std::vector<double> lambdas{0.0, 0.0001, 0.01, 0.1, 1.0};
    auto rows = lambda_ablation(nets, model, cfg, lambdas, probes, episodes, cfg.seeds.front());
    write_lambda_ablation_csv(common.out_dir + "/lambda_ablation.csv", rows);
    for (const auto& r : rows)
      std::printf("lambda %-8g success %.2f log_prior_sum %.3f feasibility %.3f value-term %.3f\n",
                  r.lambda, r.success_rate, r.mean_log_prior_sum, r.mean_feasibility,
                  r.mean_feasibility_value);
  } else if (kind == "raw_space") {
    auto nets = tdm::load_tdm(tdm_paths.front());
    auto rows = raw_space_ablation(nets, model, cfg, episodes, cfg.seeds.front());
    write_raw_space_ablation_csv(common.out_dir + "/raw_space_ablation.csv", rows);
    for (const auto& r : rows)
      std::printf("%-7s validity %.3f success %.2f distance %.3f\n", r.arm.c_str(),
                  r.subgoal_validity_rate, r.success_rate, r.final_distance_mean);
  } else {
    throw std::runtime_error("unknown ablation kind: " + kind);
  }
  write_manifest(common.out_dir + "/manifest.json", "ablate " + kind, cfg,
                 {{"tdm", tdm_paths}, {"vae", vae_path}, {"probes", probes}, {"episodes", episodes}});
  return 0;
}

int cmd_plan_demo(const CommonArgs& common, const std::string& tdm_path,
                  const std::string& vae_path, const PlannerOverrides& pov) {
  ExperimentConfig cfg = common.resolve();
  pov.apply(cfg);
  cfg.validate();
  auto nets = tdm::load_tdm(tdm_path);
  auto model = vae::load_vae(vae_path);
  auto scorers = planner::make_model_scorers(nets, model);
  auto gradients = planner::make_model_gradients(nets, model);
  auto policy = planner::make_tdm_policy(nets);

  auto rng = make_rng(common.first_seed(cfg), 47);
  auto start = env::reset(rng, env::ResetRegion::CenterBox, cfg.env);
  auto goal = env::sample_goal(rng, env::GoalRegion::BelowWall, cfg.env);
  auto record = planner::execute_episode(cfg.env, policy, scorers, &gradients, cfg.planner, start,
                                         goal, rng);

  fs::create_directories(common.out_dir);
  planner::save_episode_json(common.out_dir + "/episode.json", record);
  std::printf("start (%.2f, %.2f) goal (%.2f, %.2f)\n", start.position.x(), start.position.y(),
              goal.position.x(), goal.position.y());
  for (std::size_t i = 0; i < record.segments.size(); ++i) {
    const auto& s = record.segments[i];
    std::printf("segment %zu: subgoal (%.2f, %.2f) valid=%d feasibility %.3f reached (%.2f, %.2f)\n",
                i + 1, s.decoded_subgoal.x(), s.decoded_subgoal.y(), s.subgoal_valid ? 1 : 0,
                s.feasibility_entry, s.achieved.position.x(), s.achieved.position.y());
  }
  std::printf("final distance %.3f success %d -> %s/episode.json\n", record.final_distance,
              record.success ? 1 : 0, common.out_dir.c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"desk-scale latent-subgoal planning with goal-conditioned policies"};
  app.require_subcommand(1);

  CommonArgs collect_common, vae_common, tdm_common, eval_common, ablate_common, demo_common;
  int collect_n = -1;
  std::string vae_data;
  long vae_steps = -1, tdm_steps = -1;
  std::string eval_tdm, eval_vae, demo_tdm, demo_vae, ablate_kind, ablate_vae;
  std::vector<std::string> ablate_tdm;
  PlannerOverrides eval_pov, demo_pov;
  int eval_episodes = -1, ablate_probes = 30, ablate_episodes = 10;
  bool eval_save_episodes = false;

  auto* collect = app.add_subcommand("collect-data", "sample valid states into a CSV dataset");
  collect_common.attach(collect);
  collect->add_option("--n", collect_n, "number of states");

  auto* trainvae = app.add_subcommand("train-vae", "train the valid-state VAE (best of N seeds)");
  vae_common.attach(trainvae);
  trainvae->add_option("--data", vae_data, "states CSV (sampled fresh when omitted)");
  trainvae->add_option("--steps", vae_steps, "training steps override");

  auto* traintdm = app.add_subcommand("train-tdm", "train the goal-conditioned TDM policy/critics");
  tdm_common.attach(traintdm);
  traintdm->add_option("--steps", tdm_steps, "environment steps override");

  auto* eval = app.add_subcommand("evaluate", "run hard + uniform evaluation episodes");
  eval_common.attach(eval);
  eval->add_option("--tdm", eval_tdm, "TDM checkpoint")->required();
  eval->add_option("--vae", eval_vae, "VAE checkpoint")->required();
  eval_pov.attach(eval);
  eval->add_option("--episodes", eval_episodes, "episodes per configuration");
  eval->add_flag("--save-episodes", eval_save_episodes, "dump per-episode JSON records");

  auto* ablate = app.add_subcommand("ablate", "norm / optimizer / lambda / raw_space ablations");
  ablate_common.attach(ablate);
  ablate->add_option("--kind", ablate_kind, "norm|optimizer|lambda|raw_space")->required();
  ablate->add_option("--tdm", ablate_tdm, "TDM checkpoint(s); repeat for paired seeds")->required();
  ablate->add_option("--vae", ablate_vae, "VAE checkpoint")->required();
  ablate->add_option("--probes", ablate_probes, "planning probes per arm");
  ablate->add_option("--episodes", ablate_episodes, "executed episodes per arm");

  auto* demo = app.add_subcommand("plan-demo", "plan and execute one hard episode");
  demo_common.attach(demo);
  demo->add_option("--tdm", demo_tdm, "TDM checkpoint")->required();
  demo->add_option("--vae", demo_vae, "VAE checkpoint")->required();
  demo_pov.attach(demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (collect->parsed()) return cmd_collect_data(collect_common, collect_n);
    if (trainvae->parsed()) return cmd_train_vae(vae_common, vae_data, vae_steps);
    if (traintdm->parsed()) return cmd_train_tdm(tdm_common, tdm_steps);
    if (eval->parsed())
      return cmd_evaluate(eval_common, eval_tdm, eval_vae, eval_pov, eval_episodes,
                          eval_save_episodes);
    if (ablate->parsed())
      return cmd_ablate(ablate_common, ablate_kind, ablate_tdm, ablate_vae, ablate_probes,
                        ablate_episodes);
    if (demo->parsed()) return cmd_plan_demo(demo_common, demo_tdm, demo_vae, demo_pov);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace leap::harness
