#include "leap/planner/adapters.hpp"

namespace leap::planner {

PlanScorers make_model_scorers(const tdm::TdmNets& nets, const vae::VaeModel& model) {
  PlanScorers scorers;
  scorers.value_batch = [&nets](const Eigen::Matrix2Xd& from, const Eigen::Matrix2Xd& to, int t) {
    return tdm::value_batch(from, to, t, nets);
  };
  scorers.decode_batch = [&model](const Eigen::MatrixXd& z) {
    return vae::decode_mle_batch(z, model);
  };
  scorers.log_prior = [](const Eigen::VectorXd& z) { return vae::log_prior(z); };
  return scorers;
}

PlanGradients make_model_gradients(const tdm::TdmNets& nets, const vae::VaeModel& model) {
  PlanGradients g;
  g.value_grad = [&nets](const Eigen::Vector2d& from, const Eigen::Vector2d& to, int t,
                         Eigen::Vector2d& d_from, Eigen::Vector2d& d_to) {
    return tdm::value_grad(env::NavState{from}, env::NavState{to}, t, nets, d_from, d_to);
  };
  g.decode_grad = [&model](const Eigen::VectorXd& z, Eigen::MatrixXd& jacobian) {
    return vae::decode_mle_grad(z, model, jacobian);
  };
  return g;
}

PolicyFn make_tdm_policy(const tdm::TdmNets& nets) {
  // exploration off; the rng is never consulted on the greedy path
  return [&nets](const env::NavState& s, const env::NavState& subgoal, int t) {
    static thread_local tdm::Rng unused(0);
    return tdm::act(s, subgoal, t, nets, false, unused);
  };
}

}  // namespace leap::planner
