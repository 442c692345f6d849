"""Episode execution: policies, rollouts, and their bookkeeping.

Every evaluation in the toolkit, open-loop or not, runs through
:func:`rollout`, which feeds each observation to the policy and sums
rewards until the environment signals the episode's end.  Open-loop
policies simply ignore the observations they are handed; keeping one code
path means perturbation wrappers always execute.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs.base import Environment, EnvSpec, StepResult
from .oscillators import (
    OscillatorParams,
    PolicyVariant,
    Trajectory,
    precompute_trajectory,
)
from .pd import PDGains, compute_torque
from .seeding import derive_seed


class TrajectoryPolicy:
    """Plays back a precomputed desired-position table, one row per tick."""

    def __init__(self, trajectory: Trajectory):
        self.trajectory = trajectory
        self._tick = 0

    def reset(self, seed: int = 0) -> None:
        self._tick = 0

    def act(self, observation: np.ndarray) -> np.ndarray:
        tick = min(self._tick, self.trajectory.tick_count - 1)
        self._tick += 1
        return self.trajectory.row(tick)


class PDTrajectoryPolicy:
    """Desired positions from a table, torques from the PD law.

    For torque-actuated tasks whose observations expose joint positions and
    velocities at known indices.
    """

    def __init__(
        self,
        trajectory: Trajectory,
        gains: PDGains,
        qpos_indices: list[int],
        qvel_indices: list[int],
    ):
        self.trajectory = trajectory
        self.gains = gains
        self.qpos_indices = list(qpos_indices)
        self.qvel_indices = list(qvel_indices)
        self._tick = 0

    def reset(self, seed: int = 0) -> None:
        self._tick = 0

    def act(self, observation: np.ndarray) -> np.ndarray:
        tick = min(self._tick, self.trajectory.tick_count - 1)
        self._tick += 1
        q = observation[self.qpos_indices]
        q_dot = observation[self.qvel_indices]
        return compute_torque(self.gains, self.trajectory.row(tick), q, q_dot)


class RandomPolicy:
    """Uniform actions over the action box; the normalization floor policy."""

    def __init__(self, spec: EnvSpec, seed: int = 0):
        self.spec = spec
        self.seed = seed
        self._rng = np.random.default_rng(derive_seed(seed, "random_policy"))

    def reset(self, seed: int = 0) -> None:
        self._rng = np.random.default_rng(derive_seed(self.seed, seed, "random_policy"))

    def act(self, observation: np.ndarray) -> np.ndarray:
        low = max(self.spec.action_low, -1e3)
        high = min(self.spec.action_high, 1e3)
        return self._rng.uniform(low, high, size=self.spec.joint_count)


def make_open_loop_policy(
    params: OscillatorParams,
    variant: PolicyVariant,
    spec: EnvSpec,
    dt_phase: float = 0.001,
    gains: PDGains | None = None,
    qpos_indices: list[int] | None = None,
    qvel_indices: list[int] | None = None,
):
    """Precompute the episode's trajectory; wrap it in PD for torque tasks."""
    trajectory = precompute_trajectory(
        params, variant, spec.episode_horizon, spec.control_period, dt_phase
    )
    if spec.actuation_mode == "position":
        return TrajectoryPolicy(trajectory)
    if gains is None or qpos_indices is None or qvel_indices is None:
        raise ValueError("torque-actuated tasks need PD gains and observation index maps")
    return PDTrajectoryPolicy(trajectory, gains, qpos_indices, qvel_indices)


@dataclass(frozen=True)
class RolloutResult:
    episode_return: float
    steps: int
    actions: np.ndarray  # (steps, joints)
    terminated: bool


def rollout(env: Environment, policy, seed: int) -> RolloutResult:
    """One episode; deterministic given (env, policy, seed)."""
    observation = env.reset(seed)
    policy.reset(seed)
    total = 0.0
    actions = []
    result: StepResult | None = None
    while True:
        action = np.asarray(policy.act(observation), dtype=float)
        result = env.step(action)
        actions.append(action)
        total += result.reward
        observation = result.observation
        if result.done:
            break
    return RolloutResult(
        episode_return=total,
        steps=len(actions),
        actions=np.array(actions),
        terminated=bool(result.terminated),
    )
