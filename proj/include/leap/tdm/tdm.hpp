#pragma once

#include <optional>
#include <string>
#include <vector>

#include "leap/env/nav2d.hpp"
#include "leap/nn/network.hpp"
#include "leap/nn/optim.hpp"
#include "leap/tdm/replay.hpp"

namespace leap::tdm {

enum class QOutputMode { Scalar, PerDimension };

struct TdmConfig {
  int t_max = 100;
  int batch_size = 128;
  double epsilon_greedy = 0.1;
  double tau = 0.005;
  QOutputMode q_output_mode = QOutputMode::PerDimension;
  int policy_delay = 2;
  int updates_per_step = 1;
  std::vector<int> hidden_sizes{400, 300};
  double learning_rate = 1e-3;
  std::size_t replay_capacity = 1'000'000;
  RelabelStrategy relabel = RelabelStrategy::tdm();
  int eval_interval = 5000;
  int eval_episodes = 5;

  int q_output_dim() const { return q_output_mode == QOutputMode::Scalar ? 1 : 2; }
  void validate() const;
};

// Finite-horizon goal-conditioned actor-critic. Network inputs use
// room-centered coordinates, unit-box actions, and t / t_max horizons; the
// critic predicts negative remaining distance in raw units (per state
// dimension in PerDimension mode).
struct TdmNets {
  TdmConfig config;
  env::EnvConfig env_config;
  nn::NetworkParams q1, q2, policy;
  nn::NetworkParams q1_target, q2_target, policy_target;
};

TdmNets init_tdm_nets(const TdmConfig& config, const env::EnvConfig& env_config, Rng& rng);

// Eq.-style sparse reward on remaining-horizon indexing: -d(next, goal) when
// the remaining horizon is 0, else 0.
double tdm_reward(const env::NavState& next_state, const env::NavState& goal,
                  int remaining_horizon, int t_max);

// Bootstrapped regression target for one transition. At t = 0 it is the
// grounded per-dimension (or scalar) negative distance; otherwise the
// elementwise min of the twin target critics at the target policy's action.
Eigen::VectorXd critic_target(const Transition& transition, const TdmNets& nets);

// V(s, g, t): Q evaluated at the deterministic policy's action. PerDimension
// outputs aggregate as the negated l1 norm of the per-axis predictions.
double value(const env::NavState& s, const env::NavState& g, int t, const TdmNets& nets);
Eigen::VectorXd value_batch(const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to, int t,
                            const TdmNets& nets);

// V plus its gradients wrt both endpoint states (raw units), differentiated
// through the policy and critic.
double value_grad(const env::NavState& s, const env::NavState& g, int t, const TdmNets& nets,
                  Eigen::Vector2d& d_s, Eigen::Vector2d& d_g);

env::Action act(const env::NavState& s, const env::NavState& g, int t, const TdmNets& nets,
                bool exploration, Rng& rng);

struct Td3Losses {
  double critic_loss = 0;
  std::optional<double> policy_loss;
};

// Owns the optimizer state across updates; nets are updated in place.
class Td3Trainer {
 public:
  explicit Td3Trainer(TdmNets nets);

  Td3Losses td3_update(const std::vector<Transition>& batch);

  const TdmNets& nets() const { return nets_; }
  TdmNets take_nets() && { return std::move(nets_); }
  long update_count() const { return update_count_; }

 private:
  TdmNets nets_;
  nn::AdamState q1_adam_, q2_adam_, policy_adam_;
  long update_count_ = 0;
  double last_policy_loss_ = 0;
};

struct TrainLogRow {
  long step = 0;
  double eval_distance_mean = 0;
  double eval_success_rate = 0;
  double critic_loss = 0;
  double policy_loss = 0;
};

struct TrainResult {
  TdmNets nets;
  std::vector<TrainLogRow> log;
};

// Collects episodes with uniformly sampled starts and goals, one td3_update
// per environment step once a full trajectory is stored. Logs an evaluation
// row every eval_interval steps.
TrainResult train(const env::EnvConfig& env_config, const TdmConfig& config, long budget_steps,
                  Rng& rng);

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& log);

void save_tdm(const std::string& path, const TdmNets& nets);
TdmNets load_tdm(const std::string& path);

}  // namespace leap::tdm
