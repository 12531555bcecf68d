#pragma once

#include <string>
#include <vector>

#include "leap/harness/config.hpp"
#include "leap/planner/adapters.hpp"

namespace leap::harness {

struct MetricsRow {
  unsigned long seed = 0;
  long step = 0;
  double final_distance_mean = 0;
  double success_rate = 0;
  std::string method;
};

std::string metrics_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

nn::Rng make_rng(unsigned long seed, unsigned long salt);

struct EvalResult {
  MetricsRow hard;
  MetricsRow uniform;
  std::vector<planner::EpisodeRecord> hard_episodes;
  std::vector<planner::EpisodeRecord> uniform_episodes;
};

// Runs eval_episodes on the hard configuration (center start, goal below the
// wall) and on uniform start/goal pairs with the configured planner. K = 0
// reduces to the greedy TDM-T_max baseline and is tagged accordingly.
EvalResult evaluate(const tdm::TdmNets& nets, const vae::VaeModel& model,
                    const ExperimentConfig& config, unsigned long seed, long step_tag);

// Same protocol with caller-supplied policy/scorers (mockable core).
EvalResult evaluate_with(const planner::PolicyFn& policy, const planner::PlanScorers& scorers,
                         const planner::PlanGradients* gradients, const ExperimentConfig& config,
                         unsigned long seed, long step_tag);

std::string method_tag(const ExperimentConfig& config);

// fixed probe set of hard (start, goal) pairs shared across ablation arms
struct Probe {
  env::NavState start, goal;
};
std::vector<Probe> hard_probes(const ExperimentConfig& config, int n, unsigned long seed);

struct OptimizerAblationRow {
  std::string optimizer;
  double mean_final_loss = 0;
  double success_rate = 0;
  std::vector<double> mean_trace;
};
std::vector<OptimizerAblationRow> optimizer_ablation(const tdm::TdmNets& nets,
                                                     const vae::VaeModel& model,
                                                     const ExperimentConfig& config, int probes,
                                                     int episodes, unsigned long seed);
void write_optimizer_ablation_csv(const std::string& dir,
                                  const std::vector<OptimizerAblationRow>& rows);

struct LambdaAblationRow {
  double lambda = 0;
  double success_rate = 0;
  double mean_log_prior_sum = 0;    // sum over subgoals of log p(z_k), averaged over probes
  double mean_feasibility = 0;      // mean feasibility-vector entry, averaged over probes
  double mean_feasibility_value = 0;  // V term of the objective: -||V||_p, averaged over probes
  double final_distance_mean = 0;
};
std::vector<LambdaAblationRow> lambda_ablation(const tdm::TdmNets& nets, const vae::VaeModel& model,
                                               const ExperimentConfig& config,
                                               const std::vector<double>& lambdas, int probes,
                                               int episodes, unsigned long seed);
void write_lambda_ablation_csv(const std::string& path, const std::vector<LambdaAblationRow>& rows);

struct RawSpaceAblationRow {
  std::string arm;  // "latent" or "raw"
  double subgoal_validity_rate = 0;
  double success_rate = 0;
  double final_distance_mean = 0;
};
std::vector<RawSpaceAblationRow> raw_space_ablation(const tdm::TdmNets& nets,
                                                    const vae::VaeModel& model,
                                                    const ExperimentConfig& config, int episodes,
                                                    unsigned long seed);
void write_raw_space_ablation_csv(const std::string& path,
                                  const std::vector<RawSpaceAblationRow>& rows);

// run manifest: resolved config + inputs/outputs, enough to recompute the
// metrics from checkpoints alone
void write_manifest(const std::string& path, const std::string& command,
                    const ExperimentConfig& config, const nlohmann::json& extra);

}  // namespace leap::harness
