"""Open-loop oscillator baseline toolkit.

Phase-switched sinusoidal joint-trajectory generators, a box-constrained
evolution-strategy tuner, built-in desk-scale physics environments,
robustness protocols, and evaluation metrics.
"""

from .cmaes import CmaEs, CmaNumericalError, CmaState, Candidate, should_stop
from .envs import make_env
from .oscillators import (
    OscillatorParams,
    PhaseState,
    PolicyVariant,
    Trajectory,
    desired_position,
    phase_step,
    precompute_trajectory,
    stride_period,
)
from .pd import PDGains, compute_torque
from .perturb import PerturbationConfig, robustness_sweep, wrap
from .rollout import make_open_loop_policy, rollout
from .runner import ExperimentConfig, RunRecord, evaluate, optimize, optimize_all
from .search import SearchSpace, SpaceEntry, fixed, make_space, param_count, uniform
from .seeding import derive_seed

__version__ = "0.1.0"

__all__ = [
    "CmaEs",
    "CmaNumericalError",
    "CmaState",
    "Candidate",
    "ExperimentConfig",
    "OscillatorParams",
    "PDGains",
    "PerturbationConfig",
    "PhaseState",
    "PolicyVariant",
    "RunRecord",
    "SearchSpace",
    "SpaceEntry",
    "Trajectory",
    "compute_torque",
    "derive_seed",
    "desired_position",
    "evaluate",
    "fixed",
    "make_env",
    "make_open_loop_policy",
    "make_space",
    "optimize",
    "optimize_all",
    "param_count",
    "phase_step",
    "precompute_trajectory",
    "robustness_sweep",
    "rollout",
    "should_stop",
    "stride_period",
    "uniform",
    "wrap",
]
