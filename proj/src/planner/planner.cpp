#include "leap/planner/planner.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace leap::planner {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

int cem_elite_count(const CemConfig& config, int iteration) {
  const double frac = config.two_phase ? (iteration < config.iterations / 2 ? config.elite_frac_early
                                                                            : config.elite_frac_late)
                                       : config.elite_frac;
  return std::max(2, static_cast<int>(std::lround(frac * config.population)));
}

int TimeSchedule::total() const {
  return std::accumulate(segment_lengths.begin(), segment_lengths.end(), 0);
}

TimeSchedule TimeSchedule::tail(int first_segment) const {
  TimeSchedule t;
  t.segment_lengths.assign(segment_lengths.begin() + first_segment, segment_lengths.end());
  return t;
}

TimeSchedule time_schedule(int t_max, int k) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  if (t_max < k + 1) throw std::invalid_argument("t_max must be >= k + 1");
  const int base = t_max / (k + 1);
  TimeSchedule schedule;
  schedule.segment_lengths.assign(k + 1, base);
  schedule.segment_lengths.back() += t_max - base * (k + 1);
  return schedule;
}

void PlannerConfig::validate() const {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  const double frac = cem.two_phase ? std::min(cem.elite_frac_early, cem.elite_frac_late)
                                    : cem.elite_frac;
  if (frac * cem.population < 2.0)
    throw std::invalid_argument("cem elite fraction leaves fewer than 2 elites");
  if (cem.iterations < 1 || cem.population < 2) throw std::invalid_argument("bad cem config");
}

namespace {

// Scores a population of flattened plans (columns of Z, dimension dim*K).
// Chain points per plan: s, decoded subgoals, g.
VectorXd score_population(const MatrixXd& Z, int k, int dim, const env::NavState& s,
                          const env::NavState& g, const TimeSchedule& schedule,
                          const PlanScorers& scorers, const PlannerConfig& config) {
  const auto P = Z.cols();
  // decode all subgoals in one batch: column p * k + i is subgoal i of plan p
  MatrixXd flat(dim, P * k);
  for (Eigen::Index p = 0; p < P; ++p)
    for (int i = 0; i < k; ++i) flat.col(p * k + i) = Z.col(p).segment(i * dim, dim);
  Eigen::Matrix2Xd decoded = scorers.decode_batch(flat);

  VectorXd norm_acc = VectorXd::Zero(P);
  Eigen::Matrix2Xd from(2, P), to(2, P);
  for (int entry = 0; entry <= k; ++entry) {
    for (Eigen::Index p = 0; p < P; ++p) {
      from.col(p) = (entry == 0) ? s.position : Eigen::Vector2d(decoded.col(p * k + entry - 1));
      to.col(p) = (entry == k) ? g.position : Eigen::Vector2d(decoded.col(p * k + entry));
    }
    VectorXd v = scorers.value_batch(from, to, schedule.segment_lengths[entry]).cwiseAbs();
    if (config.norm == PlanNorm::LInf) {
      norm_acc = norm_acc.cwiseMax(v);
    } else {
      norm_acc += v;
    }
  }
  if (config.lambda > 0.0) {
    for (Eigen::Index p = 0; p < P; ++p) {
      double log_p = 0;
      for (int i = 0; i < k; ++i) log_p += scorers.log_prior(Z.col(p).segment(i * dim, dim));
      norm_acc(p) -= config.lambda * log_p;
    }
  }
  return norm_acc;
}

}  // namespace

FeasibilityVector feasibility_vector(const env::NavState& s, const LatentPlan& plan,
                                     const PlanScorers& scorers) {
  const int k = static_cast<int>(plan.subgoals.cols());
  if (plan.schedule.segments() != k + 1)
    throw std::invalid_argument("schedule must have K+1 segments");
  Eigen::Matrix2Xd decoded(2, k);
  if (k > 0) decoded = scorers.decode_batch(plan.subgoals);
  FeasibilityVector entries(k + 1);
  Eigen::Matrix2Xd from(2, 1), to(2, 1);
  for (int i = 0; i <= k; ++i) {
    from.col(0) = (i == 0) ? s.position : Eigen::Vector2d(decoded.col(i - 1));
    to.col(0) = (i == k) ? plan.final_goal.position : Eigen::Vector2d(decoded.col(i));
    entries(i) = scorers.value_batch(from, to, plan.schedule.segment_lengths[i])(0);
  }
  return entries;
}

double plan_loss(const env::NavState& s, const LatentPlan& plan, const PlanScorers& scorers,
                 const PlannerConfig& config) {
  FeasibilityVector v = feasibility_vector(s, plan, scorers).cwiseAbs();
  double loss = (config.norm == PlanNorm::LInf) ? v.maxCoeff() : v.sum();
  if (config.lambda > 0.0) {
    for (Eigen::Index i = 0; i < plan.subgoals.cols(); ++i)
      loss -= config.lambda * scorers.log_prior(plan.subgoals.col(i));
  }
  return loss;
}

namespace {

OptimizeResult cem_core(const env::NavState& s, const env::NavState& g, int k, int dim,
                        const TimeSchedule& schedule, const PlanScorers& scorers,
                        const PlannerConfig& config, const VectorXd& init_mean,
                        const VectorXd& init_std, Rng& rng) {
  const auto& cem = config.cem;
  const int D = dim * k;
  VectorXd mean = init_mean;
  VectorXd stddev = init_std;
  std::normal_distribution<double> noise(0.0, 1.0);

  OptimizeResult result;
  double best_loss = std::numeric_limits<double>::infinity();
  VectorXd best = mean;
  MatrixXd Z(D, cem.population);
  std::vector<int> idx(cem.population);

  for (int iter = 0; iter < cem.iterations; ++iter) {
    for (int p = 0; p < cem.population; ++p)
      for (int d = 0; d < D; ++d) Z(d, p) = mean(d) + stddev(d) * noise(rng);
    VectorXd losses = score_population(Z, k, dim, s, g, schedule, scorers, config);

    const int n_elite = cem_elite_count(cem, iter);
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + n_elite, idx.end(),
                      [&](int a, int b) { return losses(a) < losses(b); });

    if (losses(idx[0]) < best_loss) {
      best_loss = losses(idx[0]);
      best = Z.col(idx[0]);
    }

    // refit a diagonal Gaussian to the elites
    VectorXd new_mean = VectorXd::Zero(D);
    for (int e = 0; e < n_elite; ++e) new_mean += Z.col(idx[e]);
    new_mean /= n_elite;
    VectorXd var = VectorXd::Zero(D);
    double elite_loss_sum = 0;
    for (int e = 0; e < n_elite; ++e) {
      var += (Z.col(idx[e]) - new_mean).array().square().matrix();
      elite_loss_sum += losses(idx[e]);
    }
    var = (var / n_elite).cwiseMax(cem.min_variance);
    mean = new_mean;
    stddev = var.cwiseSqrt();
    result.loss_trace.push_back(elite_loss_sum / n_elite);

    // the fitted mean is the distribution's point estimate; score it as one
    // extra candidate so best-ever is not limited by sampling noise
    const double mean_loss = score_population(mean, k, dim, s, g, schedule, scorers, config)(0);
    if (mean_loss < best_loss) {
      best_loss = mean_loss;
      best = mean;
    }
  }

  result.final_loss = best_loss;
  result.plan.schedule = schedule;
  result.plan.final_goal = g;
  result.plan.subgoals.resize(dim, k);
  for (int i = 0; i < k; ++i) result.plan.subgoals.col(i) = best.segment(i * dim, dim);
  return result;
}

}  // namespace

OptimizeResult cem_optimize(const env::NavState& s, const env::NavState& g, int k,
                            const TimeSchedule& schedule, const PlanScorers& scorers,
                            const PlannerConfig& config, Rng& rng) {
  config.validate();
  if (k < 1) throw std::invalid_argument("cem_optimize requires k >= 1");
  if (schedule.segments() != k + 1) throw std::invalid_argument("schedule/k mismatch");
  const int D = config.latent_dim * k;
  return cem_core(s, g, k, config.latent_dim, schedule, scorers, config, VectorXd::Zero(D),
                  VectorXd::Ones(D), rng);
}

PlanLossGrad plan_loss_gradient(const VectorXd& z_flat, int k, const env::NavState& s,
                                const env::NavState& g, const TimeSchedule& schedule,
                                const PlanScorers& scorers, const PlanGradients& gradients,
                                const PlannerConfig& config) {
  const int dim = static_cast<int>(z_flat.size()) / std::max(1, k);
  // chain points: c_0 = s, c_1..c_k decoded, c_{k+1} = g
  std::vector<Eigen::Vector2d> points(k + 2);
  std::vector<MatrixXd> jac(k);
  points[0] = s.position;
  points[k + 1] = g.position;
  for (int i = 0; i < k; ++i)
    points[i + 1] = gradients.decode_grad(z_flat.segment(i * dim, dim), jac[i]);

  VectorXd entries(k + 1);
  std::vector<Eigen::Vector2d> d_from(k + 1), d_to(k + 1);
  for (int i = 0; i <= k; ++i)
    entries(i) = gradients.value_grad(points[i], points[i + 1], schedule.segment_lengths[i],
                                      d_from[i], d_to[i]);

  // weights of each entry in d||.|| / d entry
  VectorXd w = VectorXd::Zero(k + 1);
  double norm_loss;
  if (config.norm == PlanNorm::LInf) {
    int arg = 0;
    entries.cwiseAbs().maxCoeff(&arg);
    norm_loss = std::abs(entries(arg));
    w(arg) = entries(arg) >= 0 ? 1.0 : -1.0;
  } else {
    norm_loss = entries.cwiseAbs().sum();
    for (int i = 0; i <= k; ++i) w(i) = entries(i) >= 0 ? 1.0 : -1.0;
  }

  PlanLossGrad eval;
  eval.loss = norm_loss;
  eval.grad = VectorXd::Zero(z_flat.size());
  for (int j = 1; j <= k; ++j) {
    Eigen::Vector2d d_point = w(j - 1) * d_to[j - 1] + w(j) * d_from[j];
    eval.grad.segment((j - 1) * dim, dim) = jac[j - 1].transpose() * d_point;
  }
  if (config.lambda > 0.0) {
    for (int i = 0; i < k; ++i) {
      eval.loss -= config.lambda * scorers.log_prior(z_flat.segment(i * dim, dim));
      // -lambda * d log p / d z = +lambda * z for the standard normal
      eval.grad.segment(i * dim, dim) += config.lambda * z_flat.segment(i * dim, dim);
    }
  }
  return eval;
}

OptimizeResult grad_optimize(const env::NavState& s, const env::NavState& g, int k,
                             const TimeSchedule& schedule, const PlanScorers& scorers,
                             const PlanGradients& gradients, const PlannerConfig& config, Rng& rng) {
  config.validate();
  if (k < 1) throw std::invalid_argument("grad_optimize requires k >= 1");
  if (schedule.segments() != k + 1) throw std::invalid_argument("schedule/k mismatch");
  if (!gradients.value_grad || !gradients.decode_grad)
    throw std::invalid_argument("grad_optimize requires gradient callbacks");

  const int dim = config.latent_dim;
  const int D = dim * k;
  std::normal_distribution<double> noise(0.0, 1.0);
  VectorXd z(D);
  for (int d = 0; d < D; ++d) z(d) = noise(rng);

  double lr;
  switch (config.optimizer) {
    case PlanOptimizer::Adam: lr = config.grad.adam_lr; break;
    case PlanOptimizer::Sgd: lr = config.grad.sgd_lr; break;
    case PlanOptimizer::RmsProp: lr = config.grad.rmsprop_lr; break;
    default: throw std::invalid_argument("grad_optimize called with the CEM optimizer");
  }

  VectorXd m = VectorXd::Zero(D), v = VectorXd::Zero(D);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, rms_decay = 0.99;

  OptimizeResult result;
  double best_loss = std::numeric_limits<double>::infinity();
  VectorXd best = z;

  for (int step = 1; step <= config.grad.steps; ++step) {
    auto eval = plan_loss_gradient(z, k, s, g, schedule, scorers, gradients, config);
    if (!std::isfinite(eval.loss)) break;  // abort, keep trace and best-so-far
    result.loss_trace.push_back(eval.loss);
    if (eval.loss < best_loss) {
      best_loss = eval.loss;
      best = z;
    }
    switch (config.optimizer) {
      case PlanOptimizer::Adam: {
        m = beta1 * m + (1.0 - beta1) * eval.grad;
        v = beta2 * v.array() + (1.0 - beta2) * eval.grad.array().square();
        const double bc1 = 1.0 - std::pow(beta1, step);
        const double bc2 = 1.0 - std::pow(beta2, step);
        z.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
        break;
      }
      case PlanOptimizer::Sgd:
        z -= lr * eval.grad;
        break;
      case PlanOptimizer::RmsProp:
        v = rms_decay * v.array() + (1.0 - rms_decay) * eval.grad.array().square();
        z.array() -= lr * eval.grad.array() / (v.array().sqrt() + eps);
        break;
      default: break;
    }
  }

  result.final_loss = best_loss;
  result.plan.schedule = schedule;
  result.plan.final_goal = g;
  result.plan.subgoals.resize(dim, k);
  for (int i = 0; i < k; ++i) result.plan.subgoals.col(i) = best.segment(i * dim, dim);
  return result;
}

OptimizeResult optimize_plan(const env::NavState& s, const env::NavState& g, int k,
                             const TimeSchedule& schedule, const PlanScorers& scorers,
                             const PlanGradients* gradients, const PlannerConfig& config, Rng& rng) {
  if (config.optimizer == PlanOptimizer::Cem) return cem_optimize(s, g, k, schedule, scorers, config, rng);
  if (!gradients) throw std::invalid_argument("gradient optimizer selected but no gradients provided");
  return grad_optimize(s, g, k, schedule, scorers, *gradients, config, rng);
}

PlanScorers raw_space_scorers(const PlanScorers& scorers) {
  PlanScorers raw;
  raw.value_batch = scorers.value_batch;
  raw.decode_batch = [](const MatrixXd& z) -> Eigen::Matrix2Xd { return z; };
  raw.log_prior = [](const VectorXd&) { return 0.0; };
  return raw;
}

OptimizeResult plan_raw_ablation(const env::NavState& s, const env::NavState& g, int k,
                                 const TimeSchedule& schedule, const PlanScorers& scorers,
                                 const PlannerConfig& config, const env::EnvConfig& env_config,
                                 Rng& rng) {
  PlannerConfig raw_cfg = config;
  raw_cfg.lambda = 0.0;      // no validity information in raw space
  raw_cfg.latent_dim = 2;    // decision variables are observation coordinates
  raw_cfg.validate();
  if (k < 1) throw std::invalid_argument("plan_raw_ablation requires k >= 1");
  const int D = 2 * k;
  const double c = env_config.room_side / 2.0;
  VectorXd mean = VectorXd::Constant(D, c);
  VectorXd stddev = VectorXd::Constant(D, c);
  return cem_core(s, g, k, 2, schedule, raw_space_scorers(scorers), raw_cfg, mean, stddev, rng);
}

EpisodeRecord execute_episode(const env::EnvConfig& env_config, const PolicyFn& policy,
                              const PlanScorers& scorers, const PlanGradients* gradients,
                              const PlannerConfig& config, const env::NavState& start,
                              const env::NavState& goal, Rng& rng, bool raw_space) {
  config.validate();
  const int k = config.k;
  TimeSchedule schedule = time_schedule(env_config.horizon, k);
  const PlanScorers& seg_scorers = raw_space ? raw_space_scorers(scorers) : scorers;

  EpisodeRecord record;
  record.start = start;
  record.goal = goal;
  record.method = raw_space ? "raw" : "latent";

  env::NavState s = start;
  for (int seg = 0; seg <= k; ++seg) {
    SegmentRecord sr;
    sr.length = schedule.segment_lengths[seg];
    env::NavState subgoal;
    if (seg < k) {
      const int free = k - seg;
      TimeSchedule remaining = schedule.tail(seg);
      OptimizeResult opt =
          raw_space ? plan_raw_ablation(s, goal, free, remaining, scorers, config, env_config, rng)
                    : optimize_plan(s, goal, free, remaining, scorers, gradients, config, rng);
      record.replan_count += 1;
      sr.free_subgoals = free;
      sr.plan_loss = opt.final_loss;
      sr.latent = opt.plan.subgoals.col(0);
      FeasibilityVector feas = feasibility_vector(s, opt.plan, seg_scorers);
      sr.feasibility_entry = feas(0);
      for (int i = 0; i < free; ++i)
        sr.log_prior_sum += raw_space ? 0.0 : scorers.log_prior(opt.plan.subgoals.col(i));
      subgoal.position = seg_scorers.decode_batch(opt.plan.subgoals).col(0);
    } else {
      subgoal = goal;
      sr.free_subgoals = 0;
      sr.latent = VectorXd::Zero(0);
      Eigen::Matrix2Xd from(2, 1), to(2, 1);
      from.col(0) = s.position;
      to.col(0) = goal.position;
      sr.feasibility_entry = seg_scorers.value_batch(from, to, sr.length)(0);
      sr.plan_loss = std::abs(sr.feasibility_entry);
    }
    sr.decoded_subgoal = subgoal.position;
    sr.subgoal_valid = env::valid_state(subgoal.position, env_config);

    for (int t = 1; t <= sr.length; ++t) {
      s = env::step(s, policy(s, subgoal, sr.length - t), env_config);
      sr.states.push_back(s.position);
    }
    sr.achieved = s;
    record.segments.push_back(std::move(sr));
  }

  record.final_distance = env::distance(s, goal);
  record.success = env::success(s, goal, env_config);
  return record;
}

void save_episode_json(const std::string& path, const EpisodeRecord& record) {
  nlohmann::json j;
  j["start"] = {record.start.position.x(), record.start.position.y()};
  j["goal"] = {record.goal.position.x(), record.goal.position.y()};
  j["final_distance"] = record.final_distance;
  j["success"] = record.success;
  j["replan_count"] = record.replan_count;
  j["method"] = record.method;
  j["segments"] = nlohmann::json::array();
  for (const auto& s : record.segments) {
    nlohmann::json seg;
    seg["latent"] = std::vector<double>(s.latent.data(), s.latent.data() + s.latent.size());
    seg["decoded_subgoal"] = {s.decoded_subgoal.x(), s.decoded_subgoal.y()};
    seg["feasibility_entry"] = s.feasibility_entry;
    seg["plan_loss"] = s.plan_loss;
    seg["log_prior_sum"] = s.log_prior_sum;
    seg["free_subgoals"] = s.free_subgoals;
    seg["subgoal_valid"] = s.subgoal_valid;
    seg["length"] = s.length;
    seg["achieved"] = {s.achieved.position.x(), s.achieved.position.y()};
    nlohmann::json states = nlohmann::json::array();
    for (const auto& p : s.states) states.push_back({p.x(), p.y()});
    seg["states"] = std::move(states);
    j["segments"].push_back(std::move(seg));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2);
}

}  // namespace leap::planner
