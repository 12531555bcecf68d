#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "leap/planner/adapters.hpp"
#include "leap/planner/planner.hpp"

using namespace leap;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// mock scorers over a 2-d "latent" space with identity decoding
planner::PlanScorers distance_mock() {
  planner::PlanScorers s;
  s.decode_batch = [](const MatrixXd& z) -> Eigen::Matrix2Xd { return z; };
  s.value_batch = [](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to, int) {
    return (-(from - to).colwise().norm()).transpose().eval();
  };
  s.log_prior = [](const VectorXd& z) { return vae::log_prior(z); };
  return s;
}

planner::PlannerConfig mock_config(int k, double lambda = 0.0,
                                   planner::PlanNorm norm = planner::PlanNorm::LInf) {
  planner::PlannerConfig cfg;
  cfg.k = k;
  cfg.latent_dim = 2;
  cfg.lambda = lambda;
  cfg.norm = norm;
  return cfg;
}

planner::LatentPlan make_plan(const std::vector<Eigen::Vector2d>& subgoals,
                              const planner::TimeSchedule& schedule, const env::NavState& goal) {
  planner::LatentPlan plan;
  plan.subgoals.resize(2, subgoals.size());
  for (std::size_t i = 0; i < subgoals.size(); ++i) plan.subgoals.col(i) = subgoals[i];
  plan.schedule = schedule;
  plan.final_goal = goal;
  return plan;
}

}  // namespace

TEST_CASE("time_schedule: paper anchors and remainder handling") {
  auto s1 = planner::time_schedule(100, 3);
  REQUIRE(s1.segment_lengths.size() == 4);
  for (int t : s1.segment_lengths) CHECK(t == 25);

  auto s2 = planner::time_schedule(600, 11);
  REQUIRE(s2.segment_lengths.size() == 12);
  for (int t : s2.segment_lengths) CHECK(t == 50);

  auto s3 = planner::time_schedule(10, 2);
  CHECK(s3.segment_lengths == std::vector<int>{3, 3, 4});

  CHECK_THROWS_AS(planner::time_schedule(3, 3), std::invalid_argument);
  CHECK_THROWS_AS(planner::time_schedule(10, -1), std::invalid_argument);
}

TEST_CASE("time_schedule: conservation over random (t_max, k)") {
  planner::Rng rng(3);
  std::uniform_int_distribution<int> tmax(1, 1000);
  for (int i = 0; i < 500; ++i) {
    const int t = tmax(rng);
    std::uniform_int_distribution<int> kk(0, t - 1);
    const int k = kk(rng);
    auto s = planner::time_schedule(t, k);
    CHECK(s.total() == t);
    CHECK(s.segments() == k + 1);
    for (int j = 0; j + 1 < s.segments(); ++j)
      CHECK(s.segment_lengths[j] == t / (k + 1));  // all but the last are the floor
  }
}

TEST_CASE("feasibility_vector: K = 0 collapses to a single entry") {
  auto scorers = distance_mock();
  env::NavState s{{0.0, 0.0}}, g{{3.0, 4.0}};
  auto plan = make_plan({}, planner::time_schedule(100, 0), g);
  auto v = planner::feasibility_vector(s, plan, scorers);
  REQUIRE(v.size() == 1);
  CHECK(v(0) == doctest::Approx(-5.0));
}

TEST_CASE("feasibility_vector: K = 2 chains hand-computed distances") {
  auto scorers = distance_mock();
  env::NavState s{{0.0, 0.0}}, g{{6.0, 0.0}};
  auto plan = make_plan({{1.0, 0.0}, {4.0, 0.0}}, planner::time_schedule(90, 2), g);
  auto v = planner::feasibility_vector(s, plan, scorers);
  REQUIRE(v.size() == 3);
  CHECK(v(0) == doctest::Approx(-1.0));  // s -> (1,0)
  CHECK(v(1) == doctest::Approx(-3.0));  // (1,0) -> (4,0)
  CHECK(v(2) == doctest::Approx(-2.0));  // (4,0) -> g
}

TEST_CASE("feasibility_vector: straight-line waypoints under an ideal value are all ~0") {
  planner::PlanScorers scorers = distance_mock();
  // ideal reachability: anything within max_step * t is fully reachable
  scorers.value_batch = [](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to, int t) {
    VectorXd v = (from - to).colwise().norm().transpose();
    return (-(v.array() - 0.15 * t).max(0.0)).matrix().eval();
  };
  env::NavState s{{1.0, 1.0}}, g{{5.0, 1.0}};
  auto plan = make_plan({{2.0, 1.0}, {3.0, 1.0}, {4.0, 1.0}}, planner::time_schedule(100, 3), g);
  auto v = planner::feasibility_vector(s, plan, scorers);
  for (int i = 0; i < v.size(); ++i) CHECK(v(i) == doctest::Approx(0.0));
}

TEST_CASE("feasibility_vector: entry i sees only the chained pair and its segment length") {
  std::vector<std::tuple<Eigen::Vector2d, Eigen::Vector2d, int>> calls;
  planner::PlanScorers scorers = distance_mock();
  scorers.value_batch = [&](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to, int t) {
    for (int c = 0; c < from.cols(); ++c) calls.emplace_back(from.col(c), to.col(c), t);
    return VectorXd::Zero(from.cols()).eval();
  };
  env::NavState s{{0.5, 0.5}}, g{{7.0, 7.0}};
  auto schedule = planner::time_schedule(10, 2);  // segments 3, 3, 4
  auto plan = make_plan({{2.0, 2.0}, {5.0, 5.0}}, schedule, g);
  planner::feasibility_vector(s, plan, scorers);
  REQUIRE(calls.size() == 3);
  CHECK(std::get<0>(calls[0]) == s.position);
  CHECK(std::get<1>(calls[0]) == Eigen::Vector2d(2.0, 2.0));
  CHECK(std::get<2>(calls[0]) == 3);
  CHECK(std::get<0>(calls[1]) == Eigen::Vector2d(2.0, 2.0));
  CHECK(std::get<1>(calls[1]) == Eigen::Vector2d(5.0, 5.0));
  CHECK(std::get<2>(calls[1]) == 3);
  CHECK(std::get<0>(calls[2]) == Eigen::Vector2d(5.0, 5.0));
  CHECK(std::get<1>(calls[2]) == g.position);
  CHECK(std::get<2>(calls[2]) == 4);
}

TEST_CASE("plan_loss: K = 0 ignores lambda; zero mock value gives zero loss") {
  auto scorers = distance_mock();
  env::NavState s{{0.0, 0.0}}, g{{3.0, 4.0}};
  auto plan = make_plan({}, planner::time_schedule(100, 0), g);
  CHECK(planner::plan_loss(s, plan, scorers, mock_config(0, 0.0)) == doctest::Approx(5.0));
  CHECK(planner::plan_loss(s, plan, scorers, mock_config(0, 10.0)) == doctest::Approx(5.0));

  planner::PlanScorers zero = distance_mock();
  zero.value_batch = [](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd&, int) {
    return VectorXd::Zero(from.cols()).eval();
  };
  auto plan2 = make_plan({{2.0, 2.0}}, planner::time_schedule(100, 1), g);
  CHECK(planner::plan_loss(s, plan2, zero, mock_config(1, 0.0)) == doctest::Approx(0.0));
}

TEST_CASE("plan_loss: linear in lambda with slope -sum log_prior") {
  auto scorers = distance_mock();
  env::NavState s{{0.0, 0.0}}, g{{6.0, 0.0}};
  auto plan = make_plan({{1.5, 0.5}, {4.0, -0.25}}, planner::time_schedule(100, 2), g);
  const double lp = scorers.log_prior(plan.subgoals.col(0)) + scorers.log_prior(plan.subgoals.col(1));
  const double l0 = planner::plan_loss(s, plan, scorers, mock_config(2, 0.0));
  const double l1 = planner::plan_loss(s, plan, scorers, mock_config(2, 0.1));
  const double l2 = planner::plan_loss(s, plan, scorers, mock_config(2, 0.2));
  CHECK(l1 - l0 == doctest::Approx(0.1 * (-lp)));
  CHECK(l2 - l1 == doctest::Approx(0.1 * (-lp)));
}

TEST_CASE("plan_loss: norm dominance linf <= l1 <= (K+1) * linf at lambda = 0") {
  auto scorers = distance_mock();
  planner::Rng rng(17);
  std::uniform_real_distribution<double> u(0.0, 8.0);
  for (int trial = 0; trial < 200; ++trial) {
    env::NavState s{{u(rng), u(rng)}}, g{{u(rng), u(rng)}};
    auto plan = make_plan({{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}},
                          planner::time_schedule(100, 3), g);
    const double linf = planner::plan_loss(s, plan, scorers, mock_config(3, 0.0));
    const double l1 =
        planner::plan_loss(s, plan, scorers, mock_config(3, 0.0, planner::PlanNorm::L1));
    CHECK(linf <= l1 + 1e-12);
    CHECK(l1 <= 4.0 * linf + 1e-12);
  }
}

TEST_CASE("cem_elite_count: paper settings keep exactly 50; two-phase switches halfway") {
  planner::CemConfig paper;
  CHECK(planner::cem_elite_count(paper, 0) == 50);
  CHECK(planner::cem_elite_count(paper, 14) == 50);
  auto large = planner::CemConfig::large_k();
  CHECK(planner::cem_elite_count(large, 0) == 2500);    // 25% of 10000
  CHECK(planner::cem_elite_count(large, 24) == 2500);
  CHECK(planner::cem_elite_count(large, 25) == 100);    // 1% of 10000
}

namespace {

// quadratic mock: with segment length encoding the entry index, an l1 plan
// loss of sum_i ||z_i - z*_i||^2 = ||z_flat - z*||^2
struct QuadraticMock {
  std::vector<Eigen::Vector2d> targets;  // one per subgoal
  planner::PlanScorers scorers() const {
    planner::PlanScorers s;
    s.decode_batch = [](const MatrixXd& z) -> Eigen::Matrix2Xd { return z; };
    s.log_prior = [](const VectorXd&) { return 0.0; };
    auto targets_copy = targets;
    s.value_batch = [targets_copy](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to,
                                   int t) {
      // t in [1, K] marks subgoal index t-1; the final entry (t = K+1) is free
      VectorXd v = VectorXd::Zero(from.cols());
      if (t >= 1 && t <= static_cast<int>(targets_copy.size()))
        for (int c = 0; c < to.cols(); ++c)
          v(c) = -(to.col(c) - targets_copy[t - 1]).squaredNorm();
      return v.eval();
    };
    return s;
  }
  planner::TimeSchedule schedule() const {
    planner::TimeSchedule s;
    for (int i = 1; i <= static_cast<int>(targets.size()) + 1; ++i)
      s.segment_lengths.push_back(i);
    return s;
  }
};

}  // namespace

TEST_CASE("cem_optimize: recovers a 24-dim quadratic minimizer with paper settings") {
  planner::Rng target_rng(2024);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  QuadraticMock mock;
  const int k = 12;  // 12 two-dim subgoals = 24 decision variables
  for (int i = 0; i < k; ++i) mock.targets.push_back({u(target_rng), u(target_rng)});

  auto cfg = mock_config(k, 0.0, planner::PlanNorm::L1);
  planner::Rng rng(7);
  auto res = planner::cem_optimize({{0, 0}}, {{0, 0}}, k, mock.schedule(), mock.scorers(), cfg, rng);

  double worst = 0;
  for (int i = 0; i < k; ++i)
    worst = std::max(worst, (res.plan.subgoals.col(i) - mock.targets[i]).lpNorm<Eigen::Infinity>());
  CHECK(worst < 1e-2);
  CHECK(res.loss_trace.size() == 15);

  // elite-mean trace is non-increasing in at least 13 of 15 iterations
  int non_increasing = 0;
  for (std::size_t i = 1; i < res.loss_trace.size(); ++i)
    if (res.loss_trace[i] <= res.loss_trace[i - 1] + 1e-12) ++non_increasing;
  CHECK(non_increasing >= 13);
}

TEST_CASE("cem_optimize: deterministic given the rng seed") {
  QuadraticMock mock;
  mock.targets = {{1.0, -1.0}, {0.5, 0.25}};
  auto cfg = mock_config(2, 0.0, planner::PlanNorm::L1);
  cfg.cem.population = 200;
  cfg.cem.iterations = 5;
  planner::Rng r1(9), r2(9);
  auto a = planner::cem_optimize({{0, 0}}, {{0, 0}}, 2, mock.schedule(), mock.scorers(), cfg, r1);
  auto b = planner::cem_optimize({{0, 0}}, {{0, 0}}, 2, mock.schedule(), mock.scorers(), cfg, r2);
  CHECK(a.plan.subgoals == b.plan.subgoals);
  CHECK(a.final_loss == b.final_loss);
}

TEST_CASE("grad_optimize: prior term alone drives latents to the mode") {
  planner::PlanScorers zero = distance_mock();
  zero.value_batch = [](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd&, int) {
    return VectorXd::Zero(from.cols()).eval();
  };
  planner::PlanGradients grads;
  grads.value_grad = [](const Eigen::Vector2d&, const Eigen::Vector2d&, int, Eigen::Vector2d& df,
                        Eigen::Vector2d& dt) {
    df.setZero();
    dt.setZero();
    return 0.0;
  };
  grads.decode_grad = [](const VectorXd& z, MatrixXd& jac) {
    jac = MatrixXd::Identity(2, z.size());
    return Eigen::Vector2d(z(0), z(1));
  };
  auto cfg = mock_config(3, 0.5);
  cfg.optimizer = planner::PlanOptimizer::Adam;
  cfg.grad.steps = 400;
  planner::Rng rng(11);
  auto res = planner::grad_optimize({{0, 0}}, {{1, 1}}, 3, planner::time_schedule(100, 3), zero,
                                    grads, cfg, rng);
  CHECK(res.plan.subgoals.lpNorm<Eigen::Infinity>() < 0.05);
}

TEST_CASE("plan_loss_gradient: matches central finite differences on frozen tiny models") {
  auto envc = env::EnvConfig::nav2d_default();
  tdm::Rng rng(31);
  tdm::TdmConfig tcfg;
  tcfg.hidden_sizes = {8, 8};
  auto nets = tdm::init_tdm_nets(tcfg, envc, rng);
  vae::VaeConfig vcfg;
  vcfg.hidden_sizes = {16, 16};
  vae::Normalization norm;
  norm.center = Eigen::Vector2d(4.0, 4.0);
  norm.scale = Eigen::Vector2d(4.0, 4.0);
  auto model = vae::init_vae(vcfg, norm, rng);

  auto scorers = planner::make_model_scorers(nets, model);
  auto gradients = planner::make_model_gradients(nets, model);
  auto cfg = mock_config(2, 0.1, planner::PlanNorm::L1);
  cfg.latent_dim = 8;
  env::NavState s{{4.0, 4.0}}, g{{4.0, 1.0}};
  auto schedule = planner::time_schedule(100, 2);

  planner::Rng zrng(3);
  std::normal_distribution<double> nz(0.0, 0.5);
  VectorXd z(16);
  for (int i = 0; i < 16; ++i) z(i) = nz(zrng);

  auto eval = planner::plan_loss_gradient(z, 2, s, g, schedule, scorers, gradients, cfg);

  auto loss_at = [&](const VectorXd& zz) {
    planner::LatentPlan plan;
    plan.subgoals.resize(8, 2);
    plan.subgoals.col(0) = zz.head(8);
    plan.subgoals.col(1) = zz.tail(8);
    plan.schedule = schedule;
    plan.final_goal = g;
    return planner::plan_loss(s, plan, scorers, cfg);
  };
  CHECK(eval.loss == doctest::Approx(loss_at(z)));

  const double h = 1e-6;
  for (int i = 0; i < 16; ++i) {
    VectorXd zp = z, zm = z;
    zp(i) += h;
    zm(i) -= h;
    const double fd = (loss_at(zp) - loss_at(zm)) / (2 * h);
    const double diff = std::abs(eval.grad(i) - fd);
    CHECK(diff / std::max({std::abs(fd), std::abs(eval.grad(i)), 1e-3}) < 1e-3);
  }
}

TEST_CASE("execute_episode: replan count, free-subgoal shrinkage, segment lengths") {
  auto envc = env::EnvConfig::nav2d_default();
  auto scorers = distance_mock();
  auto cfg = mock_config(3, 0.0);
  cfg.cem.population = 100;
  cfg.cem.iterations = 3;
  std::vector<int> policy_horizons;
  planner::PolicyFn policy = [&](const env::NavState& s, const env::NavState& sub, int t) {
    policy_horizons.push_back(t);
    Eigen::Vector2d d = sub.position - s.position;
    return env::Action{d.cwiseMax(-0.15).cwiseMin(0.15)};
  };
  planner::Rng rng(5);
  env::NavState start{{4.0, 4.0}}, goal{{4.0, 1.0}};
  auto record = planner::execute_episode(envc, policy, scorers, nullptr, cfg, start, goal, rng);

  CHECK(record.replan_count == 3);
  REQUIRE(record.segments.size() == 4);
  CHECK(record.segments[0].free_subgoals == 3);
  CHECK(record.segments[1].free_subgoals == 2);  // K-1 after the first segment
  CHECK(record.segments[2].free_subgoals == 1);
  CHECK(record.segments[3].free_subgoals == 0);
  for (const auto& seg : record.segments) {
    CHECK(seg.length == 25);
    CHECK(static_cast<int>(seg.states.size()) == seg.length);
  }
  // the policy horizon counts down within each segment
  for (int seg = 0; seg < 4; ++seg)
    for (int t = 0; t < 25; ++t) CHECK(policy_horizons[seg * 25 + t] == 24 - t);
  // last segment targets the true goal
  CHECK(record.segments[3].decoded_subgoal == goal.position);
}

TEST_CASE("execute_episode: K = 0 never invokes the optimizer and reduces to greedy control") {
  auto envc = env::EnvConfig::nav2d_default();
  int value_calls = 0;
  planner::PlanScorers scorers = distance_mock();
  scorers.value_batch = [&](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to, int) {
    ++value_calls;
    return (-(from - to).colwise().norm()).transpose().eval();
  };
  planner::PolicyFn policy = [](const env::NavState& s, const env::NavState& sub, int) {
    Eigen::Vector2d d = sub.position - s.position;
    return env::Action{d.cwiseMax(-0.15).cwiseMin(0.15)};
  };
  auto cfg = mock_config(0, 0.0);
  planner::Rng rng(5);
  env::NavState start{{2.0, 7.0}}, goal{{6.5, 7.0}};
  auto latent = planner::execute_episode(envc, policy, scorers, nullptr, cfg, start, goal, rng);
  CHECK(latent.replan_count == 0);
  CHECK(value_calls == 1);  // only the recorded final-segment feasibility entry
  REQUIRE(latent.segments.size() == 1);
  CHECK(latent.segments[0].length == 100);
  CHECK(latent.success == false);  // goal reached but not in the below-wall region
  CHECK(latent.final_distance < 0.2);

  // raw-space variant is identical at K = 0
  planner::Rng rng2(5);
  auto raw = planner::execute_episode(envc, policy, scorers, nullptr, cfg, start, goal, rng2, true);
  CHECK(raw.final_distance == latent.final_distance);
  CHECK(raw.segments[0].achieved.position == latent.segments[0].achieved.position);
}

TEST_CASE("plan_raw_ablation: optimizes observation coordinates directly") {
  auto envc = env::EnvConfig::nav2d_default();
  auto scorers = distance_mock();  // value rewards proximity along the chain
  auto cfg = mock_config(2, 0.7);  // lambda must be ignored in raw space
  cfg.cem.population = 400;
  cfg.cem.iterations = 10;
  planner::Rng rng(13);
  env::NavState s{{1.0, 7.0}}, g{{7.0, 7.0}};
  auto res = planner::plan_raw_ablation(s, g, 2, planner::time_schedule(100, 2), scorers, cfg,
                                        envc, rng);
  REQUIRE(res.plan.subgoals.cols() == 2);
  // with a pure distance value the best chain collapses toward the endpoints'
  // segment; subgoals should land between s and g
  for (int i = 0; i < 2; ++i) {
    CHECK(res.plan.subgoals(0, i) > 0.0);
    CHECK(res.plan.subgoals(0, i) < 8.0);
  }
  CHECK(res.final_loss < 2.5);
}
