"""Open-loop joint-trajectory generators.

Each joint i follows a phase-switched sine wave

    q_i(t) = a_i * sin(theta_i(t) + phi_i) + b_i

where the phase theta_i advances at one of two global rates: omega_swing
while sin(theta_i + phi_i) > 0, omega_stance otherwise.  Joints that share
the same phase shift phi_i move synchronously; the two rates let the two
half-cycles of a stride take different durations.

Three reduced variants exist: a single-rate form (theta_i = omega * t), a
form without per-joint phase shifts, and the combination of both.

The generator never reads any feedback, so a whole episode's worth of
desired positions can be precomputed (`precompute_trajectory`).

Phase integration is explicit Euler at a fixed step (`MAX_PHASE_DT` by
default), with the rate branch evaluated at the start of each step and ties
(sin == 0) taking the stance branch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# Upper bound on the phase-integration step; the trajectory tables assume
# switching errors stay within one such step.
MAX_PHASE_DT = 0.001


class PolicyVariant(enum.Enum):
    """Which terms of the generator are active."""

    FULL = "full"
    NO_SWING = "no_swing"
    NO_PHASE = "no_phase"
    NO_PHASE_NO_SWING = "no_phase_no_swing"

    @property
    def dual_rate(self) -> bool:
        """True when the phase rate switches between swing and stance."""
        return self in (PolicyVariant.FULL, PolicyVariant.NO_PHASE)

    @property
    def uses_phase_shift(self) -> bool:
        """True when per-joint phase shifts enter the waveform."""
        return self in (PolicyVariant.FULL, PolicyVariant.NO_SWING)


@dataclass(frozen=True)
class OscillatorParams:
    """Per-joint amplitude/offset/phase-shift plus the two global rates.

    Arrays are one entry per joint (radians); rates are rad/s and shared by
    all joints.  This is the entire parameter vector of the policy.
    """

    amplitudes: np.ndarray
    offsets: np.ndarray
    phase_shifts: np.ndarray
    omega_swing: float
    omega_stance: float

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float)
        phase_shifts = np.asarray(self.phase_shifts, dtype=float)
        object.__setattr__(self, "amplitudes", amplitudes)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "phase_shifts", phase_shifts)
        n = amplitudes.shape[0]
        if n < 1:
            raise ValueError("need at least one joint")
        if offsets.shape != (n,) or phase_shifts.shape != (n,):
            raise ValueError("amplitude/offset/phase arrays must share one length")
        if not (self.omega_swing > 0.0 and self.omega_stance > 0.0):
            raise ValueError("both rates must be positive")

    @property
    def joint_count(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True)
class PhaseState:
    """Integrator state: per-joint phase theta (rad) and elapsed time (s)."""

    theta: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))


def initial_phase(joint_count: int) -> PhaseState:
    """All phases start at zero; phase shifts absorb any offset."""
    return PhaseState(theta=np.zeros(joint_count), t=0.0)


def _effective_shift(params: OscillatorParams, variant: PolicyVariant) -> np.ndarray:
    if variant.uses_phase_shift:
        return params.phase_shifts
    return np.zeros_like(params.phase_shifts)


def phase_step(
    state: PhaseState,
    params: OscillatorParams,
    variant: PolicyVariant,
    dt: float,
) -> PhaseState:
    """Advance every phase by one explicit-Euler step of length ``dt``.

    The swing/stance branch is chosen from the phase at the step's start;
    sin == 0 counts as stance.  Single-rate variants advance at omega_swing
    unconditionally.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt > MAX_PHASE_DT * (1.0 + 1e-9):
        raise ValueError(f"dt={dt} exceeds the maximum phase step {MAX_PHASE_DT}")
    if state.theta.shape[0] != params.joint_count:
        raise ValueError("state and params disagree on joint count")
    if variant.dual_rate:
        swing = np.sin(state.theta + _effective_shift(params, variant)) > 0.0
        rate = np.where(swing, params.omega_swing, params.omega_stance)
    else:
        rate = np.full_like(state.theta, params.omega_swing)
    return PhaseState(theta=state.theta + rate * dt, t=state.t + dt)


def desired_position(
    state: PhaseState,
    params: OscillatorParams,
    variant: PolicyVariant,
) -> np.ndarray:
    """Desired joint positions (rad) at the current phase."""
    if state.theta.shape[0] != params.joint_count:
        raise ValueError("state and params disagree on joint count")
    shift = _effective_shift(params, variant)
    return params.amplitudes * np.sin(state.theta + shift) + params.offsets


@dataclass(frozen=True)
class Trajectory:
    """Precomputed desired positions, one row per control tick."""

    dt_control: float
    q_des: np.ndarray  # (ticks, joints)

    @property
    def tick_count(self) -> int:
        return self.q_des.shape[0]

    def row(self, tick: int) -> np.ndarray:
        return self.q_des[tick]


def precompute_trajectory(
    params: OscillatorParams,
    variant: PolicyVariant,
    horizon: float,
    dt_control: float,
    dt_phase: float = MAX_PHASE_DT,
) -> Trajectory:
    """Integrate the phase at ``dt_phase`` and sample one row per control tick.

    ``dt_control`` must be an exact integer multiple of ``dt_phase`` so that
    substepping never drifts; rows = ceil(horizon / dt_control), with row k
    sampled at time k * dt_control.  Fully deterministic.
    """
    if not (horizon > 0.0):
        raise ValueError("horizon must be positive")
    if not (0.0 < dt_phase <= dt_control):
        raise ValueError("need dt_control >= dt_phase > 0")
    substeps = dt_control / dt_phase
    if abs(substeps - round(substeps)) > 1e-9:
        raise ValueError(
            f"dt_control={dt_control} is not an integer multiple of dt_phase={dt_phase}"
        )
    substeps = int(round(substeps))
    ticks = math.ceil(horizon / dt_control)
    shift = _effective_shift(params, variant)
    theta = np.zeros(params.joint_count)
    rows = np.empty((ticks, params.joint_count))
    # Inlined phase_step loop (identical arithmetic, no per-substep objects);
    # this is the hot path of candidate evaluation.
    dual = variant.dual_rate
    w_swing, w_stance = params.omega_swing, params.omega_stance
    for k in range(ticks):
        rows[k] = params.amplitudes * np.sin(theta + shift) + params.offsets
        if dual:
            for _ in range(substeps):
                rate = np.where(np.sin(theta + shift) > 0.0, w_swing, w_stance)
                theta = theta + rate * dt_phase
        else:
            for _ in range(substeps):
                theta = theta + w_swing * dt_phase
    return Trajectory(dt_control=dt_control, q_des=rows)


def stride_period(params: OscillatorParams) -> float:
    """Duration of one full cycle: half a turn at each rate."""
    return math.pi / params.omega_swing + math.pi / params.omega_stance
