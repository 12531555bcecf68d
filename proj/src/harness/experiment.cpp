#include "leap/harness/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace leap::harness {

namespace {
// rng stream salts so each evaluation context gets an independent stream
constexpr unsigned long kSaltEval = 101;
constexpr unsigned long kSaltProbe = 211;
constexpr unsigned long kSaltOptimizer = 307;
constexpr unsigned long kSaltOptimizerEp = 401;
constexpr unsigned long kSaltLambda = 503;
constexpr unsigned long kSaltLambdaEp = 601;
constexpr unsigned long kSaltRawSpace = 701;
}  // namespace

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = "seed,step,final_distance_mean,success_rate,method\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lu,%ld,%.9g,%.9g,%s\n", r.seed, r.step,
                  r.final_distance_mean, r.success_rate, r.method.c_str());
    out += buf;
  }
  return out;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << metrics_csv(rows);
}

nn::Rng make_rng(unsigned long seed, unsigned long salt) {
  return nn::Rng(seed * 0x9e3779b97f4a7c15ULL + salt);
}

std::string method_tag(const ExperimentConfig& config) {
  if (config.planner.k == 0) return "tdm-" + std::to_string(config.env.horizon);
  std::string tag = "leap-k" + std::to_string(config.planner.k);
  if (config.planner.norm != planner::PlanNorm::LInf)
    tag += "-" + planner::norm_name(config.planner.norm);
  if (config.planner.optimizer != planner::PlanOptimizer::Cem)
    tag += "-" + planner::optimizer_name(config.planner.optimizer);
  return tag;
}

namespace {

struct EpisodeStats {
  double distance_sum = 0;
  int successes = 0;
  int n = 0;
  void add(const planner::EpisodeRecord& r) {
    distance_sum += r.final_distance;
    successes += r.success ? 1 : 0;
    ++n;
  }
  double mean_distance() const { return n ? distance_sum / n : 0.0; }
  double success_rate() const { return n ? static_cast<double>(successes) / n : 0.0; }
};

}  // namespace

EvalResult evaluate(const tdm::TdmNets& nets, const vae::VaeModel& model,
                    const ExperimentConfig& config, unsigned long seed, long step_tag) {
  auto scorers = planner::make_model_scorers(nets, model);
  auto gradients = planner::make_model_gradients(nets, model);
  auto policy = planner::make_tdm_policy(nets);
  return evaluate_with(policy, scorers, &gradients, config, seed, step_tag);
}

EvalResult evaluate_with(const planner::PolicyFn& policy, const planner::PlanScorers& scorers,
                         const planner::PlanGradients* gradients, const ExperimentConfig& config,
                         unsigned long seed, long step_tag) {
  const std::string tag = method_tag(config);

  EvalResult result;
  EpisodeStats hard_stats, uniform_stats;

  auto rng = make_rng(seed, kSaltEval);
  for (int ep = 0; ep < config.eval_episodes; ++ep) {
    auto s0 = env::reset(rng, env::ResetRegion::CenterBox, config.env);
    auto g = env::sample_goal(rng, env::GoalRegion::BelowWall, config.env);
    auto record = planner::execute_episode(config.env, policy, scorers, gradients,
                                           config.planner, s0, g, rng);
    hard_stats.add(record);
    result.hard_episodes.push_back(std::move(record));
  }
  for (int ep = 0; ep < config.eval_episodes; ++ep) {
    auto s0 = env::reset(rng, env::ResetRegion::UniformValid, config.env);
    auto g = env::sample_goal(rng, env::GoalRegion::UniformValid, config.env);
    auto record = planner::execute_episode(config.env, policy, scorers, gradients,
                                           config.planner, s0, g, rng);
    uniform_stats.add(record);
    result.uniform_episodes.push_back(std::move(record));
  }

  result.hard = {seed, step_tag, hard_stats.mean_distance(), hard_stats.success_rate(),
                 tag + "/hard"};
  result.uniform = {seed, step_tag, uniform_stats.mean_distance(), uniform_stats.success_rate(),
                    tag + "/uniform"};
  return result;
}

namespace {

struct ProbeEpisodeOutcome {
  EpisodeStats stats;
  int valid_subgoals = 0;
  int total_subgoals = 0;
  std::vector<planner::EpisodeRecord> records;
};

// one episode per probe; per-episode rng depends on (seed, salt, index) only,
// so arms sharing a probe list see identical tasks
ProbeEpisodeOutcome run_probe_episodes(const planner::PolicyFn& policy,
                                       const planner::PlanScorers& scorers,
                                       const planner::PlanGradients* gradients,
                                       const ExperimentConfig& config,
                                       const std::vector<Probe>& probes, unsigned long seed,
                                       unsigned long salt, bool raw_space = false) {
  ProbeEpisodeOutcome out;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    auto rng = make_rng(seed, salt + 7919 * i);
    auto record = planner::execute_episode(config.env, policy, scorers, gradients, config.planner,
                                           probes[i].start, probes[i].goal, rng, raw_space);
    out.stats.add(record);
    for (std::size_t k = 0; k + 1 < record.segments.size(); ++k) {
      out.total_subgoals += 1;
      out.valid_subgoals += record.segments[k].subgoal_valid ? 1 : 0;
    }
    out.records.push_back(std::move(record));
  }
  return out;
}

}  // namespace

std::vector<Probe> hard_probes(const ExperimentConfig& config, int n, unsigned long seed) {
  auto rng = make_rng(seed, kSaltProbe);
  std::vector<Probe> probes(n);
  for (auto& p : probes) {
    p.start = env::reset(rng, env::ResetRegion::CenterBox, config.env);
    p.goal = env::sample_goal(rng, env::GoalRegion::BelowWall, config.env);
  }
  return probes;
}

std::vector<OptimizerAblationRow> optimizer_ablation(const tdm::TdmNets& nets,
                                                     const vae::VaeModel& model,
                                                     const ExperimentConfig& config, int probes,
                                                     int episodes, unsigned long seed) {
  auto scorers = planner::make_model_scorers(nets, model);
  auto gradients = planner::make_model_gradients(nets, model);
  auto policy = planner::make_tdm_policy(nets);
  auto probe_set = hard_probes(config, probes, seed);
  auto schedule = planner::time_schedule(config.env.horizon, config.planner.k);

  std::vector<OptimizerAblationRow> rows;
  for (auto opt : {planner::PlanOptimizer::Cem, planner::PlanOptimizer::Adam,
                   planner::PlanOptimizer::Sgd, planner::PlanOptimizer::RmsProp}) {
    ExperimentConfig arm = config;
    arm.planner.optimizer = opt;
    OptimizerAblationRow row;
    row.optimizer = planner::optimizer_name(opt);

    auto rng = make_rng(seed, kSaltOptimizer + static_cast<unsigned long>(opt));
    std::vector<double> trace_sum;
    for (const auto& p : probe_set) {
      auto res = planner::optimize_plan(p.start, p.goal, arm.planner.k, schedule, scorers,
                                        &gradients, arm.planner, rng);
      row.mean_final_loss += res.final_loss / probes;
      if (trace_sum.size() < res.loss_trace.size()) trace_sum.resize(res.loss_trace.size(), 0.0);
      for (std::size_t i = 0; i < res.loss_trace.size(); ++i)
        trace_sum[i] += res.loss_trace[i] / probes;
    }
    row.mean_trace = std::move(trace_sum);

    auto ep_probes = hard_probes(config, episodes, seed + 1);
    auto outcome = run_probe_episodes(policy, scorers, &gradients, arm, ep_probes, seed,
                                      kSaltOptimizerEp + static_cast<unsigned long>(opt));
    row.success_rate = outcome.stats.success_rate();
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_optimizer_ablation_csv(const std::string& dir,
                                  const std::vector<OptimizerAblationRow>& rows) {
  {
    std::ofstream out(dir + "/optimizer_ablation.csv");
    if (!out) throw std::runtime_error("cannot write optimizer ablation csv");
    out << "optimizer,mean_final_loss,success_rate\n";
    char buf[160];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g\n", r.optimizer.c_str(), r.mean_final_loss,
                    r.success_rate);
      out << buf;
    }
  }
  std::ofstream trace(dir + "/optimizer_loss_trace.csv");
  if (!trace) throw std::runtime_error("cannot write optimizer trace csv");
  trace << "optimizer,iteration,mean_loss\n";
  char buf[160];
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.mean_trace.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s,%zu,%.9g\n", r.optimizer.c_str(), i, r.mean_trace[i]);
      trace << buf;
    }
}

std::vector<LambdaAblationRow> lambda_ablation(const tdm::TdmNets& nets, const vae::VaeModel& model,
                                               const ExperimentConfig& config,
                                               const std::vector<double>& lambdas, int probes,
                                               int episodes, unsigned long seed) {
  auto scorers = planner::make_model_scorers(nets, model);
  auto gradients = planner::make_model_gradients(nets, model);
  auto policy = planner::make_tdm_policy(nets);
  auto probe_set = hard_probes(config, probes, seed);
  auto schedule = planner::time_schedule(config.env.horizon, config.planner.k);

  std::vector<LambdaAblationRow> rows;
  for (double lambda : lambdas) {
    ExperimentConfig arm = config;
    arm.planner.lambda = lambda;
    LambdaAblationRow row;
    row.lambda = lambda;

    auto rng = make_rng(seed, kSaltLambda);  // shared across arms: same plan randomness
    for (const auto& p : probe_set) {
      auto res = planner::cem_optimize(p.start, p.goal, arm.planner.k, schedule, scorers,
                                       arm.planner, rng);
      double log_prior_sum = 0;
      for (Eigen::Index i = 0; i < res.plan.subgoals.cols(); ++i)
        log_prior_sum += scorers.log_prior(res.plan.subgoals.col(i));
      row.mean_log_prior_sum += log_prior_sum / probes;
      auto feas = planner::feasibility_vector(p.start, res.plan, scorers);
      row.mean_feasibility += feas.mean() / probes;
      const double norm_part = arm.planner.norm == planner::PlanNorm::LInf
                                   ? feas.cwiseAbs().maxCoeff()
                                   : feas.cwiseAbs().sum();
      row.mean_feasibility_value += -norm_part / probes;
    }

    auto ep_probes = hard_probes(config, episodes, seed + 1);
    auto outcome = run_probe_episodes(policy, scorers, &gradients, arm, ep_probes, seed,
                                      kSaltLambdaEp + static_cast<unsigned long>(lambda * 1e6));
    row.success_rate = outcome.stats.success_rate();
    row.final_distance_mean = outcome.stats.mean_distance();
    rows.push_back(row);
  }
  return rows;
}

void write_lambda_ablation_csv(const std::string& path, const std::vector<LambdaAblationRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "lambda,success_rate,mean_log_prior_sum,mean_feasibility,mean_feasibility_value,"
         "final_distance_mean\n";
  char buf[240];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.lambda, r.success_rate,
                  r.mean_log_prior_sum, r.mean_feasibility, r.mean_feasibility_value,
                  r.final_distance_mean);
    out << buf;
  }
}

std::vector<RawSpaceAblationRow> raw_space_ablation(const tdm::TdmNets& nets,
                                                    const vae::VaeModel& model,
                                                    const ExperimentConfig& config, int episodes,
                                                    unsigned long seed) {
  auto scorers = planner::make_model_scorers(nets, model);
  auto gradients = planner::make_model_gradients(nets, model);
  auto policy = planner::make_tdm_policy(nets);

  auto probes = hard_probes(config, episodes, seed + 1);
  std::vector<RawSpaceAblationRow> rows;
  for (bool raw : {false, true}) {
    RawSpaceAblationRow row;
    row.arm = raw ? "raw" : "latent";
    auto outcome = run_probe_episodes(policy, scorers, &gradients, config, probes, seed,
                                      kSaltRawSpace + (raw ? 1 : 0), raw);
    row.subgoal_validity_rate =
        outcome.total_subgoals ? static_cast<double>(outcome.valid_subgoals) / outcome.total_subgoals
                               : 0;
    row.success_rate = outcome.stats.success_rate();
    row.final_distance_mean = outcome.stats.mean_distance();
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_raw_space_ablation_csv(const std::string& path,
                                  const std::vector<RawSpaceAblationRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "arm,subgoal_validity_rate,success_rate,final_distance_mean\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g\n", r.arm.c_str(), r.subgoal_validity_rate,
                  r.success_rate, r.final_distance_mean);
    out << buf;
  }
}

void write_manifest(const std::string& path, const std::string& command,
                    const ExperimentConfig& config, const nlohmann::json& extra) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2);
}

}  // namespace leap::harness
