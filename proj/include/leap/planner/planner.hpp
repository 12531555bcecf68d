#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "leap/env/nav2d.hpp"

namespace leap::planner {

using Rng = nn::Rng;

// Segment lengths t_1..t_{K+1}: all floor(T_max / (K+1)), the last absorbing
// the remainder; they always sum to T_max.
struct TimeSchedule {
  std::vector<int> segment_lengths;
  int total() const;
  int segments() const { return static_cast<int>(segment_lengths.size()); }
  TimeSchedule tail(int first_segment) const;
};

TimeSchedule time_schedule(int t_max, int k);

enum class PlanNorm { LInf, L1 };
enum class PlanOptimizer { Cem, Adam, Sgd, RmsProp };

struct CemConfig {
  int population = 1000;
  double elite_frac = 0.05;
  int iterations = 15;
  // large-K variant: filter top 25% for the first half of iterations, 1% after
  bool two_phase = false;
  double elite_frac_early = 0.25;
  double elite_frac_late = 0.01;
  double min_variance = 1e-6;

  static CemConfig paper_default() { return {}; }
  static CemConfig large_k() { return {10000, 0.05, 50, true, 0.25, 0.01, 1e-6}; }
};

struct GradConfig {
  int steps = 300;
  double adam_lr = 0.1;
  double sgd_lr = 0.05;
  double rmsprop_lr = 0.05;
};

struct PlannerConfig {
  int k = 3;
  int latent_dim = 8;
  double lambda = 0.1;  // prior-likelihood penalty weight
  PlanNorm norm = PlanNorm::LInf;
  PlanOptimizer optimizer = PlanOptimizer::Cem;
  CemConfig cem;
  GradConfig grad;

  void validate() const;
};

// K latent subgoal vectors plus the segment schedule; the final goal is the
// (K+1)-th chain target and is never optimized.
struct LatentPlan {
  Eigen::MatrixXd subgoals;  // latent_dim x K
  TimeSchedule schedule;     // K+1 segments
  env::NavState final_goal;
};

using FeasibilityVector = Eigen::VectorXd;  // K+1 chained reachability values

// Frozen-model callbacks; columns are independent candidates throughout.
struct PlanScorers {
  std::function<Eigen::VectorXd(const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to, int t)>
      value_batch;
  std::function<Eigen::Matrix2Xd(const Eigen::MatrixXd& z)> decode_batch;
  std::function<double(const Eigen::VectorXd& z)> log_prior;  // per subgoal vector
};

// Gradient-path callbacks for the gradient-based optimizers.
struct PlanGradients {
  std::function<double(const Eigen::Vector2d& from, const Eigen::Vector2d& to, int t,
                       Eigen::Vector2d& d_from, Eigen::Vector2d& d_to)>
      value_grad;
  std::function<Eigen::Vector2d(const Eigen::VectorXd& z, Eigen::MatrixXd& jacobian)> decode_grad;
};

// [V(s, g1^, t1), V(g1^, g2^, t2), ..., V(gK^, g, tK+1)] with gk^ the MLE
// decoding of z_k; for K = 0 the single entry is V(s, g, t1).
FeasibilityVector feasibility_vector(const env::NavState& s, const LatentPlan& plan,
                                     const PlanScorers& scorers);

// norm of the feasibility magnitudes minus lambda * sum_k log p(z_k)
double plan_loss(const env::NavState& s, const LatentPlan& plan, const PlanScorers& scorers,
                 const PlannerConfig& config);

struct OptimizeResult {
  LatentPlan plan;
  double final_loss = 0;
  std::vector<double> loss_trace;  // CEM: per-iteration elite mean; grad: per-step loss
};

// elites kept at a given iteration (two-phase configs switch halfway)
int cem_elite_count(const CemConfig& config, int iteration);

struct PlanLossGrad {
  double loss = 0;
  Eigen::VectorXd grad;
};

// plan_loss and its exact gradient wrt the flattened latent plan,
// differentiated through the decode and value callbacks.
PlanLossGrad plan_loss_gradient(const Eigen::VectorXd& z_flat, int k, const env::NavState& s,
                                const env::NavState& g, const TimeSchedule& schedule,
                                const PlanScorers& scorers, const PlanGradients& gradients,
                                const PlannerConfig& config);

// Cross-entropy method over the joint rK-dimensional latent, initialized at
// N(0, I); refits a diagonal Gaussian to the elites each iteration and
// returns the best sample ever scored.
OptimizeResult cem_optimize(const env::NavState& s, const env::NavState& g, int k,
                            const TimeSchedule& schedule, const PlanScorers& scorers,
                            const PlannerConfig& config, Rng& rng);

// First-order descent on plan_loss from a standard-normal initialization,
// differentiating through decoder and value network.
OptimizeResult grad_optimize(const env::NavState& s, const env::NavState& g, int k,
                             const TimeSchedule& schedule, const PlanScorers& scorers,
                             const PlanGradients& gradients, const PlannerConfig& config, Rng& rng);

OptimizeResult optimize_plan(const env::NavState& s, const env::NavState& g, int k,
                             const TimeSchedule& schedule, const PlanScorers& scorers,
                             const PlanGradients* gradients, const PlannerConfig& config, Rng& rng);

// Raw observation-space ablation: identical loss structure with identity
// decoding and no prior term; CEM proposals are drawn over the room box with
// no validity information.
OptimizeResult plan_raw_ablation(const env::NavState& s, const env::NavState& g, int k,
                                 const TimeSchedule& schedule, const PlanScorers& value_only,
                                 const PlannerConfig& config, const env::EnvConfig& env_config,
                                 Rng& rng);
PlanScorers raw_space_scorers(const PlanScorers& scorers);

struct SegmentRecord {
  Eigen::VectorXd latent;          // latent vector (or raw coords in raw mode)
  Eigen::Vector2d decoded_subgoal;
  double feasibility_entry = 0;    // first feasibility entry at plan time
  double plan_loss = 0;
  double log_prior_sum = 0;        // over all free subgoals of this replan
  int free_subgoals = 0;           // decision variables of this replan
  bool subgoal_valid = false;
  int length = 0;
  std::vector<Eigen::Vector2d> states;  // visited, including segment end
  env::NavState achieved;
};

struct EpisodeRecord {
  env::NavState start, goal;
  std::vector<SegmentRecord> segments;
  double final_distance = 0;
  bool success = false;
  int replan_count = 0;
  std::string method;
};

using PolicyFn =
    std::function<env::Action(const env::NavState& s, const env::NavState& subgoal, int t)>;

// Receding-horizon execution: before each of the first K segments, re-optimize
// the remaining subgoals from the current true state, decode the first, and
// run the policy toward it for the segment length; the last segment targets
// the true goal directly.
EpisodeRecord execute_episode(const env::EnvConfig& env_config, const PolicyFn& policy,
                              const PlanScorers& scorers, const PlanGradients* gradients,
                              const PlannerConfig& config, const env::NavState& start,
                              const env::NavState& goal, Rng& rng, bool raw_space = false);

void save_episode_json(const std::string& path, const EpisodeRecord& record);

}  // namespace leap::planner
