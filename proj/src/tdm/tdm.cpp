#include "leap/tdm/tdm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "leap/common/serialize.hpp"
#include "leap/nn/checkpoint.hpp"

namespace leap::tdm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void TdmConfig::validate() const {
  if (t_max < 1 || batch_size < 1 || policy_delay < 1 || updates_per_step < 1)
    throw std::invalid_argument("tdm config values must be positive");
  if (epsilon_greedy < 0.0 || epsilon_greedy > 1.0)
    throw std::invalid_argument("epsilon must be in [0,1]");
  relabel.validate();
}

namespace {

// network input conventions: room-centered positions, unit-box actions,
// horizons scaled to [0, 1]
double pos_scale(const env::EnvConfig& e) { return e.room_side / 2.0; }

Eigen::Vector2d norm_pos(const Eigen::Vector2d& p, const env::EnvConfig& e) {
  return (p.array() - pos_scale(e)) / pos_scale(e);
}

MatrixXd norm_pos_batch(const Eigen::Matrix2Xd& p, const env::EnvConfig& e) {
  return ((p.array() - pos_scale(e)) / pos_scale(e)).matrix();
}

MatrixXd policy_input(const MatrixXd& s_n, const MatrixXd& g_n, double h) {
  MatrixXd x(5, s_n.cols());
  x.topRows(2) = s_n;
  x.middleRows(2, 2) = g_n;
  x.row(4).setConstant(h);
  return x;
}

MatrixXd q_input(const MatrixXd& s_n, const MatrixXd& a_u, const MatrixXd& g_n, double h) {
  MatrixXd x(7, s_n.cols());
  x.topRows(2) = s_n;
  x.middleRows(2, 2) = a_u;
  x.middleRows(4, 2) = g_n;
  x.row(6).setConstant(h);
  return x;
}

double aggregate_value(const VectorXd& q, QOutputMode mode) {
  if (mode == QOutputMode::Scalar) return q(0);
  return -q.array().abs().sum();
}

}  // namespace

TdmNets init_tdm_nets(const TdmConfig& config, const env::EnvConfig& env_config, Rng& rng) {
  config.validate();
  TdmNets nets;
  nets.config = config;
  nets.env_config = env_config;
  nn::NetworkSpec q_spec{7, config.hidden_sizes, config.q_output_dim(), nn::Activation::Relu,
                         nn::Activation::None};
  nn::NetworkSpec pi_spec{5, config.hidden_sizes, 2, nn::Activation::Relu, nn::Activation::Tanh};
  nets.q1 = nn::init_network(q_spec, rng);
  nets.q2 = nn::init_network(q_spec, rng);
  nets.policy = nn::init_network(pi_spec, rng);
  nets.q1_target = nets.q1;
  nets.q2_target = nets.q2;
  nets.policy_target = nets.policy;
  return nets;
}

double tdm_reward(const env::NavState& next_state, const env::NavState& goal,
                  int remaining_horizon, int t_max) {
  if (remaining_horizon < 0 || remaining_horizon > t_max)
    throw std::invalid_argument("remaining_horizon out of range");
  if (remaining_horizon == 0) return -env::distance(next_state, goal);
  return 0.0;
}

Eigen::VectorXd critic_target(const Transition& tr, const TdmNets& nets) {
  const auto& e = nets.env_config;
  const int d = nets.config.q_output_dim();
  if (tr.remaining_horizon == 0) {
    VectorXd target(d);
    if (nets.config.q_output_mode == QOutputMode::Scalar) {
      target(0) = -env::distance(tr.next_state, tr.goal);
    } else {
      target = -(tr.next_state.position - tr.goal.position).cwiseAbs();
    }
    return target;
  }
  const int t_next = tr.remaining_horizon - 1;
  const double h = static_cast<double>(t_next) / nets.config.t_max;
  MatrixXd s_n = norm_pos(tr.next_state.position, e);
  MatrixXd g_n = norm_pos(tr.goal.position, e);
  MatrixXd a = nn::forward_batch(nets.policy_target, policy_input(s_n, g_n, h));
  MatrixXd xq = q_input(s_n, a, g_n, h);
  VectorXd q1 = nn::forward_batch(nets.q1_target, xq).col(0);
  VectorXd q2 = nn::forward_batch(nets.q2_target, xq).col(0);
  return q1.cwiseMin(q2);
}

double value(const env::NavState& s, const env::NavState& g, int t, const TdmNets& nets) {
  Eigen::Matrix2Xd from(2, 1), to(2, 1);
  from.col(0) = s.position;
  to.col(0) = g.position;
  return value_batch(from, to, t, nets)(0);
}

Eigen::VectorXd value_batch(const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to, int t,
                            const TdmNets& nets) {
  const auto& e = nets.env_config;
  const double h = static_cast<double>(t) / nets.config.t_max;
  MatrixXd s_n = norm_pos_batch(from, e);
  MatrixXd g_n = norm_pos_batch(to, e);
  MatrixXd a = nn::forward_batch(nets.policy, policy_input(s_n, g_n, h));
  MatrixXd q = nn::forward_batch(nets.q1, q_input(s_n, a, g_n, h));
  if (nets.config.q_output_mode == QOutputMode::Scalar) return q.row(0).transpose();
  return -q.array().abs().colwise().sum().transpose();
}

double value_grad(const env::NavState& s, const env::NavState& g, int t, const TdmNets& nets,
                  Eigen::Vector2d& d_s, Eigen::Vector2d& d_g) {
  const auto& e = nets.env_config;
  const double h = static_cast<double>(t) / nets.config.t_max;
  const double inv_scale = 1.0 / pos_scale(e);
  MatrixXd s_n = norm_pos(s.position, e);
  MatrixXd g_n = norm_pos(g.position, e);

  auto pi_cache = nn::forward_cached(nets.policy, policy_input(s_n, g_n, h));
  MatrixXd a = pi_cache.output();
  auto q_cache = nn::forward_cached(nets.q1, q_input(s_n, a, g_n, h));
  VectorXd q = q_cache.output().col(0);

  VectorXd dq(q.size());
  double v;
  if (nets.config.q_output_mode == QOutputMode::Scalar) {
    v = q(0);
    dq(0) = 1.0;
  } else {
    v = -q.array().abs().sum();
    dq = -q.array().sign();
  }

  auto q_grads = nn::zero_grads(nets.q1);
  MatrixXd dq_in(7, 1);
  nn::backward(nets.q1, q_cache, dq, q_grads, &dq_in);

  auto pi_grads = nn::zero_grads(nets.policy);
  MatrixXd dpi_in(5, 1);
  nn::backward(nets.policy, pi_cache, dq_in.block(2, 0, 2, 1), pi_grads, &dpi_in);

  d_s = (dq_in.block(0, 0, 2, 1) + dpi_in.block(0, 0, 2, 1)) * inv_scale;
  d_g = (dq_in.block(4, 0, 2, 1) + dpi_in.block(2, 0, 2, 1)) * inv_scale;
  return v;
}

env::Action act(const env::NavState& s, const env::NavState& g, int t, const TdmNets& nets,
                bool exploration, Rng& rng) {
  const auto& e = nets.env_config;
  if (exploration) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < nets.config.epsilon_greedy) {
      std::uniform_real_distribution<double> ua(-e.max_step, e.max_step);
      const double ax = ua(rng);
      const double ay = ua(rng);
      return env::Action{{ax, ay}};
    }
  }
  const double h = static_cast<double>(t) / nets.config.t_max;
  MatrixXd s_n = norm_pos(s.position, e);
  MatrixXd g_n = norm_pos(g.position, e);
  VectorXd a = nn::forward_batch(nets.policy, policy_input(s_n, g_n, h)).col(0);
  return env::Action{a * e.max_step};
}

Td3Trainer::Td3Trainer(TdmNets nets)
    : nets_(std::move(nets)),
      q1_adam_(nn::make_adam_state(nets_.q1, {.learning_rate = nets_.config.learning_rate})),
      q2_adam_(nn::make_adam_state(nets_.q2, {.learning_rate = nets_.config.learning_rate})),
      policy_adam_(nn::make_adam_state(nets_.policy, {.learning_rate = nets_.config.learning_rate})) {}

Td3Losses Td3Trainer::td3_update(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::invalid_argument("td3_update: empty batch");
  const auto& e = nets_.env_config;
  const auto& cfg = nets_.config;
  const int B = static_cast<int>(batch.size());
  const int d = cfg.q_output_dim();
  const double inv_tmax = 1.0 / cfg.t_max;

  Eigen::Matrix2Xd S(2, B), Nx(2, B), G(2, B);
  MatrixXd A_u(2, B);
  VectorXd horizons(B);
  for (int b = 0; b < B; ++b) {
    S.col(b) = batch[b].state.position;
    Nx.col(b) = batch[b].next_state.position;
    G.col(b) = batch[b].goal.position;
    A_u.col(b) = batch[b].action.velocity / e.max_step;
    horizons(b) = static_cast<double>(batch[b].remaining_horizon);
  }
  MatrixXd S_n = norm_pos_batch(S, e);
  MatrixXd Nx_n = norm_pos_batch(Nx, e);
  MatrixXd G_n = norm_pos_batch(G, e);

  // bootstrap targets at horizon t-1, then ground the t = 0 columns
  MatrixXd x_pt(5, B);
  x_pt.topRows(2) = Nx_n;
  x_pt.middleRows(2, 2) = G_n;
  x_pt.row(4) = ((horizons.array() - 1.0).max(0.0) * inv_tmax).transpose();
  MatrixXd a_t = nn::forward_batch(nets_.policy_target, x_pt);
  MatrixXd x_qt(7, B);
  x_qt.topRows(2) = Nx_n;
  x_qt.middleRows(2, 2) = a_t;
  x_qt.middleRows(4, 2) = G_n;
  x_qt.row(6) = x_pt.row(4);
  MatrixXd target = nn::forward_batch(nets_.q1_target, x_qt)
                        .cwiseMin(nn::forward_batch(nets_.q2_target, x_qt));
  for (int b = 0; b < B; ++b) {
    if (batch[b].remaining_horizon == 0) {
      if (cfg.q_output_mode == QOutputMode::Scalar) {
        target(0, b) = -(Nx.col(b) - G.col(b)).norm();
      } else {
        target.col(b) = -(Nx.col(b) - G.col(b)).cwiseAbs();
      }
    }
  }

  MatrixXd x_q(7, B);
  x_q.topRows(2) = S_n;
  x_q.middleRows(2, 2) = A_u;
  x_q.middleRows(4, 2) = G_n;
  x_q.row(6) = (horizons.array() * inv_tmax).transpose();

  Td3Losses losses;
  const double denom = static_cast<double>(B) * d;
  for (auto [q, adam] : {std::pair{&nets_.q1, &q1_adam_}, std::pair{&nets_.q2, &q2_adam_}}) {
    auto cache = nn::forward_cached(*q, x_q);
    MatrixXd diff = cache.output() - target;
    losses.critic_loss += diff.squaredNorm() / denom / 2.0;  // mean over both critics
    auto grads = nn::zero_grads(*q);
    nn::backward(*q, cache, (2.0 / denom) * diff, grads);
    nn::adam_step(*q, grads, *adam);
  }
  if (!std::isfinite(losses.critic_loss))
    throw std::runtime_error("non-finite critic loss (batch size " + std::to_string(B) + ")");

  update_count_ += 1;
  if (update_count_ % cfg.policy_delay == 0) {
    MatrixXd x_p(5, B);
    x_p.topRows(2) = S_n;
    x_p.middleRows(2, 2) = G_n;
    x_p.row(4) = x_q.row(6);
    auto pi_cache = nn::forward_cached(nets_.policy, x_p);
    MatrixXd x_q_pi = x_q;
    x_q_pi.middleRows(2, 2) = pi_cache.output();
    auto q_cache = nn::forward_cached(nets_.q1, x_q_pi);
    const MatrixXd& qv = q_cache.output();

    double policy_loss;
    MatrixXd dq;
    if (cfg.q_output_mode == QOutputMode::Scalar) {
      policy_loss = -qv.mean();
      dq = MatrixXd::Constant(1, B, -1.0 / B);
    } else {
      policy_loss = qv.array().abs().sum() / B;  // negated mean value
      dq = (qv.array().sign() / B).matrix();
    }
    if (!std::isfinite(policy_loss)) throw std::runtime_error("non-finite policy loss");

    auto q_scratch = nn::zero_grads(nets_.q1);
    MatrixXd dq_in(7, B);
    nn::backward(nets_.q1, q_cache, dq, q_scratch, &dq_in);
    auto pi_grads = nn::zero_grads(nets_.policy);
    nn::backward(nets_.policy, pi_cache, dq_in.middleRows(2, 2), pi_grads);
    nn::adam_step(nets_.policy, pi_grads, policy_adam_);

    losses.policy_loss = policy_loss;
    last_policy_loss_ = policy_loss;
  }

  nn::soft_update(nets_.q1_target, nets_.q1, cfg.tau);
  nn::soft_update(nets_.q2_target, nets_.q2, cfg.tau);
  nn::soft_update(nets_.policy_target, nets_.policy, cfg.tau);
  return losses;
}

namespace {

double eval_distance(const TdmNets& nets, const env::EnvConfig& e, int episodes, Rng& rng) {
  double total = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    auto s = env::reset(rng, env::ResetRegion::UniformValid, e);
    auto g = env::sample_goal(rng, env::GoalRegion::UniformValid, e);
    for (int i = 0; i < e.horizon; ++i)
      s = env::step(s, act(s, g, e.horizon - 1 - i, nets, false, rng), e);
    total += env::distance(s, g);
  }
  return total / episodes;
}

double eval_hard_success(const TdmNets& nets, const env::EnvConfig& e, int episodes, Rng& rng) {
  int wins = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    auto s = env::reset(rng, env::ResetRegion::CenterBox, e);
    auto g = env::sample_goal(rng, env::GoalRegion::BelowWall, e);
    for (int i = 0; i < e.horizon; ++i)
      s = env::step(s, act(s, g, e.horizon - 1 - i, nets, false, rng), e);
    if (env::success(s, g, e)) ++wins;
  }
  return static_cast<double>(wins) / episodes;
}

}  // namespace

TrainResult train(const env::EnvConfig& env_config, const TdmConfig& config, long budget_steps,
                  Rng& rng) {
  config.validate();
  Td3Trainer trainer(init_tdm_nets(config, env_config, rng));
  ReplayBuffer buffer(config.replay_capacity);
  TrainResult result;

  long step = 0;
  double critic_acc = 0, policy_acc = 0;
  long critic_n = 0, policy_n = 0;

  while (step < budget_steps) {
    auto s = env::reset(rng, env::ResetRegion::UniformValid, env_config);
    auto g = env::sample_goal(rng, env::GoalRegion::UniformValid, env_config);
    Trajectory traj;
    for (int i = 0; i < env_config.horizon && step < budget_steps; ++i) {
      const int remaining = env_config.horizon - 1 - i;
      auto a = act(s, g, remaining, trainer.nets(), true, rng);
      auto next = env::step(s, a, env_config);
      traj.steps.push_back({s, a, next, g, remaining});
      s = next;
      ++step;

      if (buffer.size() >= static_cast<std::size_t>(config.batch_size)) {
        for (int u = 0; u < config.updates_per_step; ++u) {
          auto batch =
              sample_relabeled_batch(buffer, config.relabel, rng, config.batch_size, config.t_max);
          auto losses = trainer.td3_update(batch.transitions);
          critic_acc += losses.critic_loss;
          ++critic_n;
          if (losses.policy_loss) {
            policy_acc += *losses.policy_loss;
            ++policy_n;
          }
        }
      }

      if (config.eval_interval > 0 && step % config.eval_interval == 0) {
        TrainLogRow row;
        row.step = step;
        row.eval_distance_mean = eval_distance(trainer.nets(), env_config, config.eval_episodes, rng);
        row.eval_success_rate = eval_hard_success(trainer.nets(), env_config, config.eval_episodes, rng);
        row.critic_loss = critic_n ? critic_acc / critic_n : 0.0;
        row.policy_loss = policy_n ? policy_acc / policy_n : 0.0;
        result.log.push_back(row);
        critic_acc = policy_acc = 0;
        critic_n = policy_n = 0;
      }
    }
    if (!traj.steps.empty()) buffer.add_trajectory(std::move(traj));
  }

  result.nets = std::move(trainer).take_nets();
  return result;
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "step,eval_distance_mean,eval_success_rate,critic_loss,policy_loss\n";
  char buf[256];
  for (const auto& r : log) {
    std::snprintf(buf, sizeof(buf), "%ld,%.9g,%.9g,%.9g,%.9g\n", r.step, r.eval_distance_mean,
                  r.eval_success_rate, r.critic_loss, r.policy_loss);
    out << buf;
  }
}

void save_tdm(const std::string& path, const TdmNets& nets) {
  nlohmann::json j;
  j["format"] = "leap-tdm-v1";
  j["config"] = nets.config;
  j["env_config"] = nets.env_config;
  j["q1"] = nn::network_to_json(nets.q1);
  j["q2"] = nn::network_to_json(nets.q2);
  j["policy"] = nn::network_to_json(nets.policy);
  j["q1_target"] = nn::network_to_json(nets.q1_target);
  j["q2_target"] = nn::network_to_json(nets.q2_target);
  j["policy_target"] = nn::network_to_json(nets.policy_target);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump();
}

TdmNets load_tdm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "leap-tdm-v1") throw std::runtime_error("unrecognized TDM checkpoint");
  TdmNets nets;
  nets.config = j.at("config").get<TdmConfig>();
  nets.env_config = j.at("env_config").get<env::EnvConfig>();
  nets.q1 = nn::network_from_json(j.at("q1"));
  nets.q2 = nn::network_from_json(j.at("q2"));
  nets.policy = nn::network_from_json(j.at("policy"));
  nets.q1_target = nn::network_from_json(j.at("q1_target"));
  nets.q2_target = nn::network_from_json(j.at("q2_target"));
  nets.policy_target = nn::network_from_json(j.at("policy_target"));
  return nets;
}

}  // namespace leap::tdm
