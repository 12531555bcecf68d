#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "leap/harness/experiment.hpp"
#include "leap/nn/checkpoint.hpp"
#include "leap/planner/adapters.hpp"

namespace py = pybind11;
using namespace leap;

namespace {

env::EnvConfig default_env() { return env::EnvConfig::nav2d_default(); }

planner::PlanScorers scorers_from_callbacks(
    const std::function<Eigen::VectorXd(Eigen::Matrix2Xd, Eigen::Matrix2Xd, int)>& value,
    const std::function<Eigen::Matrix2Xd(Eigen::MatrixXd)>& decode) {
  planner::PlanScorers s;
  s.value_batch = [value](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to, int t) {
    return value(from, to, t);
  };
  s.decode_batch = [decode](const Eigen::MatrixXd& z) { return decode(z); };
  s.log_prior = [](const Eigen::VectorXd& z) { return vae::log_prior(z); };
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "goal-conditioned latent-subgoal planning core";

  // --- environment ---
  py::class_<env::EnvConfig>(m, "EnvConfig")
      .def(py::init(&default_env))
      .def_readwrite("room_side", &env::EnvConfig::room_side)
      .def_readwrite("agent_radius", &env::EnvConfig::agent_radius)
      .def_readwrite("max_step", &env::EnvConfig::max_step)
      .def_readwrite("horizon", &env::EnvConfig::horizon)
      .def_readwrite("wall_bottom_y", &env::EnvConfig::wall_bottom_y);

  m.def("valid_state", [](const Eigen::Vector2d& p, const env::EnvConfig& c) {
    return env::valid_state(p, c);
  });
  m.def("step", [](const Eigen::Vector2d& pos, const Eigen::Vector2d& action,
                   const env::EnvConfig& c) -> Eigen::Vector2d {
    return env::step(env::NavState{pos}, env::Action{action}, c).position;
  });
  m.def("distance", [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return env::distance(env::NavState{a}, env::NavState{b});
  });
  m.def("success", [](const Eigen::Vector2d& final_pos, const Eigen::Vector2d& goal,
                      const env::EnvConfig& c) {
    return env::success(env::NavState{final_pos}, env::NavState{goal}, c);
  });
  m.def("sample_valid_states", [](int n, unsigned long seed, const env::EnvConfig& c) {
    nn::Rng rng(seed);
    auto states = env::sample_valid_states(rng, n, c);
    Eigen::MatrixXd out(2, states.size());
    for (std::size_t i = 0; i < states.size(); ++i) out.col(i) = states[i].position;
    return out;
  });

  // --- tdm / planning primitives ---
  m.def("tdm_reward", [](const Eigen::Vector2d& next, const Eigen::Vector2d& goal, int t,
                         int t_max) {
    return tdm::tdm_reward(env::NavState{next}, env::NavState{goal}, t, t_max);
  });
  m.def("time_schedule", [](int t_max, int k) {
    return planner::time_schedule(t_max, k).segment_lengths;
  });
  m.def("log_prior", &vae::log_prior);

  // --- networks ---
  py::class_<nn::NetworkParams>(m, "Network")
      .def_static("load", &nn::load_network)
      .def("forward",
           [](const nn::NetworkParams& p, const Eigen::VectorXd& x) { return nn::forward(p, x); })
      .def_property_readonly("input_dim",
                             [](const nn::NetworkParams& p) { return p.spec.input_dim; })
      .def_property_readonly("output_dim",
                             [](const nn::NetworkParams& p) { return p.spec.output_dim; });

  // --- trained models ---
  py::class_<vae::VaeModel>(m, "VaeModel")
      .def_static("load", &vae::load_vae)
      .def("encode_mean",
           [](const vae::VaeModel& m_, const Eigen::Vector2d& s) {
             return vae::encode(s, m_).mean;
           })
      .def("decode", [](const vae::VaeModel& m_, const Eigen::VectorXd& z) {
        return vae::decode_mle(z, m_);
      })
      .def_property_readonly("latent_dim",
                             [](const vae::VaeModel& m_) { return m_.config.latent_dim; });

  py::class_<tdm::TdmNets>(m, "TdmModel")
      .def_static("load", &tdm::load_tdm)
      .def("value",
           [](const tdm::TdmNets& nets, const Eigen::Vector2d& s, const Eigen::Vector2d& g,
              int t) { return tdm::value(env::NavState{s}, env::NavState{g}, t, nets); })
      .def("act", [](const tdm::TdmNets& nets, const Eigen::Vector2d& s, const Eigen::Vector2d& g,
                     int t) {
        nn::Rng rng(0);
        return tdm::act(env::NavState{s}, env::NavState{g}, t, nets, false, rng).velocity;
      });

  // --- planner over python callbacks ---
  py::class_<planner::OptimizeResult>(m, "OptimizeResult")
      .def_readonly("final_loss", &planner::OptimizeResult::final_loss)
      .def_readonly("loss_trace", &planner::OptimizeResult::loss_trace)
      .def_property_readonly("subgoals", [](const planner::OptimizeResult& r) {
        return r.plan.subgoals;
      });

  m.def(
      "cem_optimize",
      [](const Eigen::Vector2d& start, const Eigen::Vector2d& goal, int k, int latent_dim,
         std::vector<int> segment_lengths,
         const std::function<Eigen::VectorXd(Eigen::Matrix2Xd, Eigen::Matrix2Xd, int)>& value,
         const std::function<Eigen::Matrix2Xd(Eigen::MatrixXd)>& decode, double lambda,
         const std::string& norm, int population, int iterations, unsigned long seed) {
        planner::PlannerConfig cfg;
        cfg.k = k;
        cfg.latent_dim = latent_dim;
        cfg.lambda = lambda;
        cfg.norm = planner::norm_from_name(norm);
        cfg.cem.population = population;
        cfg.cem.iterations = iterations;
        planner::TimeSchedule schedule{std::move(segment_lengths)};
        nn::Rng rng(seed);
        return planner::cem_optimize(env::NavState{start}, env::NavState{goal}, k, schedule,
                                     scorers_from_callbacks(value, decode), cfg, rng);
      },
      py::arg("start"), py::arg("goal"), py::arg("k"), py::arg("latent_dim"),
      py::arg("segment_lengths"), py::arg("value"), py::arg("decode"), py::arg("lambda") = 0.0,
      py::arg("norm") = "linf", py::arg("population") = 1000, py::arg("iterations") = 15,
      py::arg("seed") = 0);

  // --- end-to-end episode with trained checkpoints ---
  m.def(
      "run_episode",
      [](const tdm::TdmNets& nets, const vae::VaeModel& model, int k, double lambda,
         unsigned long seed, bool hard) {
        harness::ExperimentConfig cfg = harness::nav2d_preset();
        cfg.env = nets.env_config;
        cfg.planner.k = k;
        cfg.planner.lambda = lambda;
        cfg.planner.latent_dim = model.config.latent_dim;
        cfg.vae.latent_dim = model.config.latent_dim;
        auto scorers = planner::make_model_scorers(nets, model);
        auto gradients = planner::make_model_gradients(nets, model);
        auto policy = planner::make_tdm_policy(nets);
        auto rng = harness::make_rng(seed, 47);
        auto start = env::reset(rng, hard ? env::ResetRegion::CenterBox : env::ResetRegion::UniformValid,
                                cfg.env);
        auto goal = env::sample_goal(rng, hard ? env::GoalRegion::BelowWall : env::GoalRegion::UniformValid,
                                     cfg.env);
        auto record = planner::execute_episode(cfg.env, policy, scorers, &gradients, cfg.planner,
                                               start, goal, rng);
        py::dict out;
        out["start"] = record.start.position;
        out["goal"] = record.goal.position;
        out["final_distance"] = record.final_distance;
        out["success"] = record.success;
        out["replan_count"] = record.replan_count;
        std::vector<Eigen::Vector2d> subgoals;
        for (const auto& seg : record.segments) subgoals.push_back(seg.decoded_subgoal);
        out["subgoals"] = subgoals;
        return out;
      },
      py::arg("tdm"), py::arg("vae"), py::arg("k") = 3, py::arg("lambda") = 0.1,
      py::arg("seed") = 0, py::arg("hard") = true);
}
