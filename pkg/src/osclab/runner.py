"""Experiment orchestration: optimize, evaluate, and record runs.

A run optimizes the generator parameters for one environment with the
ask/tell strategy, scoring each candidate by the episodic return of a
single rollout (the built-in plants are deterministic given the seed).
Budgets count environment control steps.  Candidate evaluations may run in
a worker pool; fitnesses are keyed by candidate id, so the resulting trace
is identical for any ``jobs`` setting.

Per-environment defaults (search-space rows, PD gains, observation index
maps for torque-actuated external tasks) live in the tables below.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .cmaes import CmaEs, should_stop
from .envs import BridgeError, EXTERNAL_PREFIX, make_env
from .envs.base import Environment
from .oscillators import OscillatorParams, PolicyVariant
from .pd import PDGains
from .rollout import RandomPolicy, make_open_loop_policy, rollout
from .search import SearchSpace, make_space
from .seeding import derive_seed

TWO_PI = 2.0 * math.pi
CONFIG_SCHEMA = 1
RECORD_SCHEMA = 1


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration (CLI exit code 1)."""


@dataclass(frozen=True)
class EnvDefaults:
    """Search-space row and control defaults for one environment."""

    joint_count: int
    amplitude: object
    offset: object
    phase: tuple = (0.0, TWO_PI)
    omega: tuple = (TWO_PI * 0.4, TWO_PI * 2.0)
    pd: PDGains | None = None
    qpos_indices: tuple[int, ...] | None = None
    qvel_indices: tuple[int, ...] | None = None


BUILTIN_DEFAULTS = {
    "purcell_swimmer": EnvDefaults(
        joint_count=2, amplitude=1.0, offset=0.0,
        omega=(TWO_PI * 0.4, TWO_PI * 2.0),
    ),
    "crawler": EnvDefaults(
        joint_count=1, amplitude=(-0.5, 0.5), offset=(-0.5, 0.5),
        omega=(TWO_PI * 0.4, TWO_PI * 2.0),
    ),
}

# External locomotion tasks (v4 suite): uniform sampling rows, PD gains and
# the observation indices carrying joint positions/velocities.
EXTERNAL_DEFAULTS = {
    "Swimmer-v4": EnvDefaults(
        2, 1.0, 0.0, (0.0, TWO_PI), (TWO_PI * 0.4, TWO_PI * 2.0),
        PDGains(7.0, 0.7, torque_limit=1.0), (1, 2), (6, 7),
    ),
    "Hopper-v4": EnvDefaults(
        3, (-1.0, 1.0), 0.0, (0.0, TWO_PI), (TWO_PI * 0.4, TWO_PI * 5.0),
        PDGains(10.0, 0.5, torque_limit=1.0), (2, 3, 4), (8, 9, 10),
    ),
    "HalfCheetah-v4": EnvDefaults(
        6, (-2.0, 2.0), (-1.0, 1.0), (0.0, TWO_PI), (TWO_PI * 0.4, TWO_PI * 5.0),
        PDGains(1.0, 0.05, torque_limit=1.0), (2, 3, 4, 5, 6, 7), (11, 12, 13, 14, 15, 16),
    ),
    "Walker2d-v4": EnvDefaults(
        6, (-1.0, 1.0), (-1.0, 1.0), (0.0, TWO_PI), (TWO_PI * 0.4, TWO_PI * 6.0),
        PDGains(10.0, 0.5, torque_limit=1.0), (2, 3, 4, 5, 6, 7), (11, 12, 13, 14, 15, 16),
    ),
    "Ant-v4": EnvDefaults(
        8, (-1.0, 1.0), (-1.0, 1.0), (0.0, TWO_PI), (TWO_PI * 0.4, TWO_PI * 2.0),
        PDGains(1.0, 0.05, torque_limit=1.0),
        (5, 6, 7, 8, 9, 10, 11, 12), (19, 20, 21, 22, 23, 24, 25, 26),
    ),
}


def env_defaults(env_name: str) -> EnvDefaults:
    if env_name.startswith(EXTERNAL_PREFIX):
        env_id = env_name[len(EXTERNAL_PREFIX):]
        if env_id in EXTERNAL_DEFAULTS:
            return EXTERNAL_DEFAULTS[env_id]
        raise ConfigError(
            f"no defaults for external task {env_id!r}; set search_space/pd in the config"
        )
    if env_name in BUILTIN_DEFAULTS:
        return BUILTIN_DEFAULTS[env_name]
    raise ConfigError(f"unknown environment {env_name!r}")


@dataclass
class ExperimentConfig:
    env: str
    variant: PolicyVariant = PolicyVariant.FULL
    seeds: tuple[int, ...] = (0,)
    budget_steps: int = 200_000
    budget_multiplier: int = 1
    population_size: int = 30
    dt_phase: float = 0.001
    jobs: int = 1
    restarts: bool = False
    out_dir: str | None = None
    method: str | None = None
    # search-space overrides; scalar = fixed entry, (lo, hi) = uniform entry
    joint_count: int | None = None
    amplitude: object = None
    offset: object = None
    phase: object = None
    omega: object = None
    pd: PDGains | None = None
    bridge_command: tuple[str, ...] | None = None
    bridge_endpoint: str | None = None
    max_episode_steps: int = 1000
    qpos_indices: tuple[int, ...] | None = None
    qvel_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        if isinstance(self.variant, str):
            self.variant = PolicyVariant(self.variant)
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.budget_steps * self.budget_multiplier <= 0:
            raise ConfigError("budget must be positive")
        if self.population_size < 2:
            raise ConfigError("population size must be at least 2")

    @property
    def budget(self) -> int:
        return self.budget_steps * self.budget_multiplier

    @property
    def method_name(self) -> str:
        return self.method or f"open_loop_{self.variant.value}"

    def resolved(self) -> "ExperimentConfig":
        """Fill unset row fields from the environment defaults.

        The defaults table is only consulted for fields the config leaves
        unset, so fully-specified configs work for any external task.
        """
        merged = ExperimentConfig(**{**self.__dict__})
        row = None

        def defaults() -> EnvDefaults:
            nonlocal row
            if row is None:
                row = env_defaults(self.env)
            return row

        if merged.joint_count is None:
            merged.joint_count = defaults().joint_count
        if merged.amplitude is None:
            merged.amplitude = defaults().amplitude
        if merged.offset is None:
            merged.offset = defaults().offset
        if merged.phase is None:
            merged.phase = defaults().phase
        if merged.omega is None:
            merged.omega = defaults().omega
        if merged.pd is None and merged.env.startswith(EXTERNAL_PREFIX):
            merged.pd = defaults().pd  # built-ins take desired positions directly
        if merged.env.startswith(EXTERNAL_PREFIX):
            if merged.qpos_indices is None:
                merged.qpos_indices = defaults().qpos_indices
            if merged.qvel_indices is None:
                merged.qvel_indices = defaults().qvel_indices
            if merged.bridge_command is None and merged.bridge_endpoint is None:
                merged.bridge_command = ("python", "-m", "oscbridge")
        return merged

    def search_space(self) -> SearchSpace:
        cfg = self.resolved()
        return make_space(
            joint_count=cfg.joint_count,
            amplitude=_as_spec(cfg.amplitude),
            offset=_as_spec(cfg.offset),
            phase=_as_spec(cfg.phase),
            omega=_as_spec(cfg.omega),
            variant=self.variant,
        )

    def env_kwargs(self) -> dict:
        if not self.env.startswith(EXTERNAL_PREFIX):
            return {}
        cfg = self.resolved()
        kwargs = {"max_episode_steps": cfg.max_episode_steps}
        if cfg.bridge_endpoint is not None:
            kwargs["endpoint"] = cfg.bridge_endpoint
        else:
            kwargs["command"] = list(cfg.bridge_command)
        return kwargs

    def to_dict(self) -> dict:
        cfg = self.resolved()
        data = {
            "schema": CONFIG_SCHEMA,
            "env": cfg.env,
            "variant": cfg.variant.value,
            "seeds": list(cfg.seeds),
            "budget_steps": cfg.budget_steps,
            "budget_multiplier": cfg.budget_multiplier,
            "population_size": cfg.population_size,
            "dt_phase": cfg.dt_phase,
            "jobs": cfg.jobs,
            "restarts": cfg.restarts,
            "out_dir": cfg.out_dir,
            "method": cfg.method,
            "joint_count": cfg.joint_count,
            "search_space": {
                "amplitude": _spec_to_yaml(cfg.amplitude),
                "offset": _spec_to_yaml(cfg.offset),
                "phase": _spec_to_yaml(cfg.phase),
                "omega": _spec_to_yaml(cfg.omega),
            },
        }
        if cfg.pd is not None:
            data["pd"] = {"kp": cfg.pd.kp, "kd": cfg.pd.kd, "torque_limit": cfg.pd.torque_limit}
        if cfg.env.startswith(EXTERNAL_PREFIX):
            data["bridge"] = {
                "command": list(cfg.bridge_command) if cfg.bridge_command else None,
                "endpoint": cfg.bridge_endpoint,
                "max_episode_steps": cfg.max_episode_steps,
                "qpos_indices": list(cfg.qpos_indices) if cfg.qpos_indices else None,
                "qvel_indices": list(cfg.qvel_indices) if cfg.qvel_indices else None,
            }
        return data

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict) or "env" not in data:
            raise ConfigError("config must be a mapping with at least an 'env' key")
        schema = data.get("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported config schema {schema}")
        space = data.get("search_space", {}) or {}
        pd_block = data.get("pd")
        bridge = data.get("bridge", {}) or {}
        try:
            return cls(
                env=data["env"],
                variant=PolicyVariant(data.get("variant", "full")),
                seeds=tuple(data.get("seeds", [0])),
                budget_steps=int(data.get("budget_steps", 200_000)),
                budget_multiplier=int(data.get("budget_multiplier", 1)),
                population_size=int(data.get("population_size", 30)),
                dt_phase=float(data.get("dt_phase", 0.001)),
                jobs=int(data.get("jobs", 1)),
                restarts=bool(data.get("restarts", False)),
                out_dir=data.get("out_dir"),
                method=data.get("method"),
                joint_count=data.get("joint_count"),
                amplitude=_spec_from_yaml(space.get("amplitude")),
                offset=_spec_from_yaml(space.get("offset")),
                phase=_spec_from_yaml(space.get("phase")),
                omega=_spec_from_yaml(space.get("omega")),
                pd=PDGains(
                    kp=float(pd_block["kp"]),
                    kd=float(pd_block["kd"]),
                    torque_limit=pd_block.get("torque_limit"),
                ) if pd_block else None,
                bridge_command=tuple(bridge["command"]) if bridge.get("command") else None,
                bridge_endpoint=bridge.get("endpoint"),
                max_episode_steps=int(bridge.get("max_episode_steps", 1000)),
                qpos_indices=tuple(bridge["qpos_indices"]) if bridge.get("qpos_indices") else None,
                qvel_indices=tuple(bridge["qvel_indices"]) if bridge.get("qvel_indices") else None,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad config: {exc}") from exc

    @classmethod
    def from_yaml(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
        return cls.from_dict(data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _as_spec(value):
    if value is None:
        raise ConfigError("unresolved search-space field")
    if isinstance(value, (int, float)):
        return float(value)
    lo, hi = value
    return (float(lo), float(hi))


def _spec_to_yaml(value):
    if isinstance(value, (int, float)):
        return float(value)
    return [float(value[0]), float(value[1])]


def _spec_from_yaml(value):
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return (float(value[0]), float(value[1]))
    raise ConfigError(f"search-space field must be a scalar or [lo, hi], got {value!r}")


@dataclass
class RunRecord:
    """Persistent outcome of one optimization run."""

    env: str
    variant: str
    seed: int
    config_hash: str
    population_size: int
    best_per_generation: list[float] = field(default_factory=list)
    best_fitness: float = -math.inf
    best_params: dict | None = None
    best_episode_seed: int | None = None
    env_steps: int = 0
    wall_time: float = 0.0
    incomplete: bool = True
    aborted: str | None = None

    def to_dict(self) -> dict:
        return {"schema": RECORD_SCHEMA, **self.__dict__}

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")

    @classmethod
    def load(cls, path) -> "RunRecord":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"record file not found: {path}")
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
        if data.pop("schema", RECORD_SCHEMA) != RECORD_SCHEMA:
            raise ConfigError("unsupported record schema")
        return cls(**data)

    def oscillator_params(self) -> OscillatorParams:
        if self.best_params is None:
            raise ConfigError("record has no stored parameters")
        p = self.best_params
        return OscillatorParams(
            amplitudes=np.array(p["amplitudes"]),
            offsets=np.array(p["offsets"]),
            phase_shifts=np.array(p["phase_shifts"]),
            omega_swing=p["omega_swing"],
            omega_stance=p["omega_stance"],
        )


def params_to_dict(params: OscillatorParams) -> dict:
    return {
        "amplitudes": [float(v) for v in params.amplitudes],
        "offsets": [float(v) for v in params.offsets],
        "phase_shifts": [float(v) for v in params.phase_shifts],
        "omega_swing": float(params.omega_swing),
        "omega_stance": float(params.omega_stance),
    }


# --- candidate evaluation (shared by the inline and worker-pool paths) ----

_ENV_CACHE: dict[str, Environment] = {}


def _cached_env(env_name: str, env_kwargs: dict) -> Environment:
    key = json.dumps({"env": env_name, **env_kwargs}, sort_keys=True, default=str)
    if key not in _ENV_CACHE:
        _ENV_CACHE[key] = make_env(env_name, **env_kwargs)
    return _ENV_CACHE[key]


def _evaluate_payload(payload: dict) -> tuple[int, float, int, bool]:
    """(candidate id, fitness, env steps used, terminated-early flag)."""
    env = _cached_env(payload["env"], payload["env_kwargs"])
    params = OscillatorParams(
        amplitudes=np.array(payload["amplitudes"]),
        offsets=np.array(payload["offsets"]),
        phase_shifts=np.array(payload["phase_shifts"]),
        omega_swing=payload["omega_swing"],
        omega_stance=payload["omega_stance"],
    )
    gains = PDGains(*payload["pd"]) if payload["pd"] else None
    policy = make_open_loop_policy(
        params,
        PolicyVariant(payload["variant"]),
        env.spec,
        dt_phase=payload["dt_phase"],
        gains=gains,
        qpos_indices=payload["qpos"],
        qvel_indices=payload["qvel"],
    )
    result = rollout(env, policy, payload["episode_seed"])
    return payload["candidate_id"], result.episode_return, result.steps, result.terminated


def optimize(config: ExperimentConfig, seed: int | None = None) -> RunRecord:
    """One optimization run; returns the persisted-state record."""
    cfg = config.resolved()
    seed = cfg.seeds[0] if seed is None else int(seed)
    t_start = time.monotonic()

    env = _cached_env(cfg.env, cfg.env_kwargs())
    space = cfg.search_space()
    if space.joint_count != env.spec.joint_count:
        raise ConfigError(
            f"search space decodes to {space.joint_count} joints but "
            f"{cfg.env} has {env.spec.joint_count}"
        )

    record = RunRecord(
        env=cfg.env,
        variant=cfg.variant.value,
        seed=seed,
        config_hash=cfg.config_hash(),
        population_size=cfg.population_size,
    )
    steps_per_episode = env.spec.episode_steps
    budget = cfg.budget
    max_evaluations = budget // steps_per_episode
    strategy = CmaEs(space, seed=derive_seed(seed, "cmaes"), population_size=cfg.population_size)
    pd_tuple = (cfg.pd.kp, cfg.pd.kd, cfg.pd.torque_limit) if cfg.pd else None

    pool = None
    if cfg.jobs > 1:
        pool = concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs)
    history: list[float] = []
    restarts_used = 0
    try:
        while True:
            population = strategy.constants.population_size
            if record.env_steps + population * steps_per_episode > budget:
                break
            if should_stop(strategy.state, history, max_evaluations):
                if cfg.restarts:
                    restarts_used += 1
                    strategy = CmaEs(
                        space,
                        seed=derive_seed(seed, "restart", restarts_used),
                        population_size=cfg.population_size * 2**restarts_used,
                    )
                    history = []
                    continue
                break
            generation = strategy.state.generation
            candidates = strategy.ask()
            payloads = [
                {
                    "env": cfg.env,
                    "env_kwargs": cfg.env_kwargs(),
                    "candidate_id": cand.id,
                    "episode_seed": derive_seed(seed, "gen", generation, "cand", cand.id),
                    "variant": cfg.variant.value,
                    "dt_phase": cfg.dt_phase,
                    "pd": pd_tuple,
                    "qpos": list(cfg.qpos_indices) if cfg.qpos_indices else None,
                    "qvel": list(cfg.qvel_indices) if cfg.qvel_indices else None,
                    **params_to_dict(cand.params),
                }
                for cand in candidates
            ]
            if pool is not None:
                results = list(pool.map(_evaluate_payload, payloads))
            else:
                results = [_evaluate_payload(p) for p in payloads]
            results.sort(key=lambda r: r[0])
            fitnesses = [(cid, fit) for cid, fit, _, _ in results]
            strategy.tell(fitnesses)

            record.env_steps += sum(steps for _, _, steps, _ in results)
            gen_best_id, gen_best_fit = max(fitnesses, key=lambda kv: (kv[1], -kv[0]))
            record.best_per_generation.append(gen_best_fit)
            if gen_best_fit > record.best_fitness:
                record.best_fitness = gen_best_fit
                record.best_params = params_to_dict(candidates[gen_best_id].params)
                record.best_episode_seed = derive_seed(
                    seed, "gen", generation, "cand", gen_best_id
                )
            history.append(record.best_fitness)
        record.incomplete = len(record.best_per_generation) == 0
    except BridgeError as exc:
        record.incomplete = True
        record.aborted = str(exc)
    finally:
        if pool is not None:
            pool.shutdown()
        record.wall_time = time.monotonic() - t_start
    return record


def optimize_all(config: ExperimentConfig) -> list[RunRecord]:
    """Independent runs, one per configured seed."""
    return [optimize(config, seed) for seed in config.seeds]


@dataclass(frozen=True)
class EvalRun:
    returns: list[float]
    actions: list[np.ndarray]  # per-seed (steps, joints) command streams


def evaluate(
    params: OscillatorParams,
    variant: PolicyVariant,
    env: Environment,
    seeds,
    dt_phase: float = 0.001,
    gains: PDGains | None = None,
    qpos_indices=None,
    qvel_indices=None,
) -> EvalRun:
    """One deterministic episode per seed, plus the emitted action streams."""
    policy = make_open_loop_policy(
        params, variant, env.spec,
        dt_phase=dt_phase, gains=gains,
        qpos_indices=qpos_indices, qvel_indices=qvel_indices,
    )
    returns, actions = [], []
    for seed in seeds:
        result = rollout(env, policy, int(seed))
        returns.append(result.episode_return)
        actions.append(result.actions)
    return EvalRun(returns=returns, actions=actions)


def generation_rows(config: ExperimentConfig, record: RunRecord) -> list[dict]:
    """CSV rows (env,method,variant,seed,generation,return) for one record."""
    return [
        {
            "env": record.env,
            "method": config.method_name,
            "variant": record.variant,
            "seed": record.seed,
            "generation": g,
            "return": best,
        }
        for g, best in enumerate(record.best_per_generation)
    ]


def random_policy_returns(env: Environment, seeds) -> list[float]:
    """Anchor runs for normalization: uniform actions in the action box."""
    policy = RandomPolicy(env.spec, seed=0)
    return [rollout(env, policy, int(s)).episode_return for s in seeds]
