"""Episodic environment contract shared by built-ins and bridged tasks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# All built-in plants integrate at this step; control periods must be an
# integer multiple of it.
PHYSICS_DT = 0.001


@dataclass(frozen=True)
class EnvSpec:
    joint_count: int
    obs_dim: int
    control_period: float
    episode_horizon: float
    actuation_mode: str  # "position" | "torque" (meaning of the action vector)
    action_low: float
    action_high: float

    def __post_init__(self):
        if self.episode_horizon <= 0.0:
            raise ValueError("episode horizon must be positive")
        ratio = self.control_period / PHYSICS_DT
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(
                f"control period {self.control_period} is not a multiple of {PHYSICS_DT}"
            )
        if self.actuation_mode not in ("position", "torque"):
            raise ValueError(f"unknown actuation mode {self.actuation_mode!r}")

    @property
    def substeps_per_control(self) -> int:
        return int(round(self.control_period / PHYSICS_DT))

    @property
    def episode_steps(self) -> int:
        """Control steps per episode (horizon is truncated at this count)."""
        return int(np.ceil(self.episode_horizon / self.control_period - 1e-12))


@dataclass(frozen=True)
class StepResult:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class Environment:
    """Minimal episodic interface.

    Instances are single-threaded and independent; run one per worker.
    ``reset(seed)`` must be deterministic for a given seed, and
    ``(seed, action stream, forcing stream)`` must determine the trajectory
    bit-exactly.
    """

    spec: EnvSpec
    force_dim: int = 0  # dimensionality of an external disturbance force

    def reset(self, seed: int = 0) -> np.ndarray:
        raise NotImplementedError

    def step(self, action: np.ndarray) -> StepResult:
        raise NotImplementedError

    def apply_external_force(self, force: np.ndarray, duration_steps: int = 1) -> None:
        """Inject a world-frame force for the next ``duration_steps`` control steps."""
        raise UnsupportedOperationError(
            f"{type(self).__name__} does not support external forcing"
        )

    def _check_action(self, action) -> np.ndarray:
        action = np.asarray(action, dtype=float)
        if action.shape != (self.spec.joint_count,):
            raise ValueError(
                f"expected action of shape ({self.spec.joint_count},), got {action.shape}"
            )
        if not np.all(np.isfinite(action)):
            raise ValueError("action contains NaN or Inf")
        return np.clip(action, self.spec.action_low, self.spec.action_high)


class UnsupportedOperationError(RuntimeError):
    """The environment cannot perform the requested operation."""


class EpisodeOverError(RuntimeError):
    """step() was called after the episode terminated or was truncated."""
