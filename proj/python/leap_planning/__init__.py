"""Python bindings for the latent-subgoal planning core.

The heavy lifting (environment, networks, TDM, VAE, CEM planner) lives in the
C++ extension; this package re-exports it together with a couple of small
conveniences for scripting and plotting.
"""

from ._core import (
    EnvConfig,
    Network,
    OptimizeResult,
    TdmModel,
    VaeModel,
    cem_optimize,
    distance,
    log_prior,
    run_episode,
    sample_valid_states,
    step,
    success,
    tdm_reward,
    time_schedule,
    valid_state,
)

__all__ = [
    "EnvConfig",
    "Network",
    "OptimizeResult",
    "TdmModel",
    "VaeModel",
    "cem_optimize",
    "distance",
    "log_prior",
    "run_episode",
    "sample_valid_states",
    "step",
    "success",
    "tdm_reward",
    "time_schedule",
    "valid_state",
]
