#pragma once

#include "leap/planner/planner.hpp"
#include "leap/tdm/tdm.hpp"
#include "leap/vae/vae.hpp"

namespace leap::planner {

// Callbacks over frozen trained models. The referenced nets/model must
// outlive the returned closures.
PlanScorers make_model_scorers(const tdm::TdmNets& nets, const vae::VaeModel& model);
PlanGradients make_model_gradients(const tdm::TdmNets& nets, const vae::VaeModel& model);

// Greedy goal-conditioned policy for segment execution.
PolicyFn make_tdm_policy(const tdm::TdmNets& nets);

}  // namespace leap::planner
