"""Sensor-corruption and disturbance wrappers around any environment.

Each wrapped step applies, in order: the dynamics perturbation (an impulse
of configured magnitude, fired with the configured probability in a
uniformly random direction, lasting one control step), then the
observation corruption on one sensor channel:

* ``gaussian_noise``: add zero-mean noise of standard deviation sigma,
* ``failure_type_i``: the sensor reads zero,
* ``failure_type_ii``: the sensor reads a constant large value (default 5).

Observation corruption never touches the dynamics: with matched seeds the
underlying state trajectory is bit-identical to the unwrapped run.  The
corruption and force streams are seeded independently of the environment
via the documented hash of (config seed, episode seed, stream label); see
:mod:`osclab.seeding`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import metrics
from .envs.base import Environment, StepResult
from .rollout import rollout
from .seeding import derive_seed

GAUSSIAN_NOISE = "gaussian_noise"
FAILURE_TYPE_I = "failure_type_i"
FAILURE_TYPE_II = "failure_type_ii"
EXTERNAL_FORCE = "external_force"

_KINDS = (GAUSSIAN_NOISE, FAILURE_TYPE_I, FAILURE_TYPE_II, EXTERNAL_FORCE)

# Sweep defaults: the noise-intensity grid (0.2 is the intensity used when
# training with sensor noise), the stuck-sensor constant, and the impulse
# protocol (5 N with probability 5% per control step).
DEFAULT_NOISE_GRID = (0.05, 0.1, 0.2, 0.5, 1.0)
DEFAULT_FAILURE_VALUE = 5.0
DEFAULT_FORCE_MAGNITUDE = 5.0
DEFAULT_FORCE_PROBABILITY = 0.05


@dataclass(frozen=True)
class PerturbationConfig:
    kind: str
    sigma: float = 0.0
    value: float = DEFAULT_FAILURE_VALUE
    magnitude: float = 0.0
    probability: float = 0.0
    direction_mode: str = "uniform"
    target_index: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.sigma < 0.0:
            raise ValueError("sigma must be non-negative")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        if self.magnitude < 0.0:
            raise ValueError("magnitude must be non-negative")

    @property
    def label(self) -> str:
        if self.kind == GAUSSIAN_NOISE:
            return f"gaussian_noise_{self.sigma:g}"
        if self.kind == FAILURE_TYPE_I:
            return "failure_type_i"
        if self.kind == FAILURE_TYPE_II:
            return f"failure_type_ii_{self.value:g}"
        return f"external_force_{self.magnitude:g}N_p{self.probability:g}"

    @classmethod
    def gaussian_noise(cls, sigma: float, target_index: int = 0, seed: int = 0):
        return cls(GAUSSIAN_NOISE, sigma=sigma, target_index=target_index, seed=seed)

    @classmethod
    def failure_type_i(cls, target_index: int = 0, seed: int = 0):
        return cls(FAILURE_TYPE_I, target_index=target_index, seed=seed)

    @classmethod
    def failure_type_ii(
        cls, value: float = DEFAULT_FAILURE_VALUE, target_index: int = 0, seed: int = 0
    ):
        return cls(FAILURE_TYPE_II, value=value, target_index=target_index, seed=seed)

    @classmethod
    def external_force(
        cls,
        magnitude: float = DEFAULT_FORCE_MAGNITUDE,
        probability: float = DEFAULT_FORCE_PROBABILITY,
        seed: int = 0,
    ):
        return cls(EXTERNAL_FORCE, magnitude=magnitude, probability=probability, seed=seed)


def default_sweep_configs(seed: int = 0) -> list[PerturbationConfig]:
    """The standard sweep: noise grid, both failure types, the impulse protocol."""
    configs = [PerturbationConfig.gaussian_noise(s, seed=seed) for s in DEFAULT_NOISE_GRID]
    configs.append(PerturbationConfig.failure_type_i(seed=seed))
    configs.append(PerturbationConfig.failure_type_ii(seed=seed))
    configs.append(PerturbationConfig.external_force(seed=seed))
    return configs


class PerturbedEnv(Environment):
    """Wrapper applying one perturbation config; same spec as the inner env."""

    def __init__(self, env: Environment, config: PerturbationConfig):
        if config.target_index >= env.spec.obs_dim:
            raise ValueError(
                f"target index {config.target_index} out of range for obs_dim {env.spec.obs_dim}"
            )
        if config.kind == EXTERNAL_FORCE and env.force_dim == 0:
            raise ValueError("environment does not support external forcing")
        self.env = env
        self.config = config
        self.spec = env.spec
        self.force_dim = env.force_dim
        self.impulse_count = 0
        self._noise_rng = np.random.default_rng(0)
        self._force_rng = np.random.default_rng(0)

    def reset(self, seed: int = 0) -> np.ndarray:
        self._noise_rng = np.random.default_rng(derive_seed(self.config.seed, seed, "noise"))
        self._force_rng = np.random.default_rng(derive_seed(self.config.seed, seed, "force"))
        self.impulse_count = 0
        return self._corrupt(self.env.reset(seed))

    def apply_external_force(self, force, duration_steps: int = 1) -> None:
        self.env.apply_external_force(force, duration_steps)

    def _corrupt(self, observation: np.ndarray) -> np.ndarray:
        cfg = self.config
        if cfg.kind == EXTERNAL_FORCE:
            return observation
        observation = observation.copy()
        if cfg.kind == GAUSSIAN_NOISE:
            if cfg.sigma > 0.0:
                observation[cfg.target_index] += cfg.sigma * self._noise_rng.standard_normal()
        elif cfg.kind == FAILURE_TYPE_I:
            observation[cfg.target_index] = 0.0
        elif cfg.kind == FAILURE_TYPE_II:
            observation[cfg.target_index] = cfg.value
        return observation

    def _maybe_fire_impulse(self) -> None:
        cfg = self.config
        if cfg.kind != EXTERNAL_FORCE:
            return
        if self._force_rng.random() >= cfg.probability:
            return
        if self.force_dim == 1:
            # One-dimensional plant: "uniform direction" degenerates to a sign.
            direction = np.array([1.0 if self._force_rng.random() < 0.5 else -1.0])
        else:
            angle = self._force_rng.random() * 2.0 * math.pi
            direction = np.array([math.cos(angle), math.sin(angle)])
            if self.force_dim > 2:
                direction = np.concatenate([direction, np.zeros(self.force_dim - 2)])
        self.env.apply_external_force(cfg.magnitude * direction, duration_steps=1)
        self.impulse_count += 1

    def step(self, action) -> StepResult:
        self._maybe_fire_impulse()
        result = self.env.step(action)
        return replace(result, observation=self._corrupt(result.observation))


def wrap(env: Environment, config: PerturbationConfig) -> PerturbedEnv:
    """Wrap ``env`` so each step applies ``config``'s perturbation."""
    return PerturbedEnv(env, config)


def robustness_sweep(
    policy,
    env_factory,
    configs: Sequence[PerturbationConfig],
    seeds: Sequence[int],
    env_name: str | None = None,
    anchors: dict[str, tuple[float, float]] | None = None,
) -> metrics.EvalReport:
    """Episodic returns per (config, seed); aggregates when anchors are given.

    ``env_factory`` is either a registry name or a zero-argument callable;
    the same rollout path runs whether or not the policy reads observations.
    """
    from .envs import make_env  # local import to keep module load light

    if callable(env_factory):
        factory = env_factory
        name = env_name or "env"
    else:
        factory = lambda: make_env(env_factory)  # noqa: E731
        name = env_name or env_factory

    scores: dict[metrics.ScoreKey, float] = {}
    for config in configs:
        env = wrap(factory(), config)
        for seed in seeds:
            scores[(name, config.label, int(seed))] = rollout(env, policy, seed).episode_return
    table = metrics.ScoreTable(returns=scores, anchors=anchors or {})
    if not scores or not anchors:
        return metrics.EvalReport(scores=scores, anchors=dict(anchors or {}))
    return metrics.aggregate(table)
