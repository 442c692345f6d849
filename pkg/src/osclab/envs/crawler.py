"""Two-mass inchworm with a suction foot, on a line.

A body mass and a foot mass are joined by a linear actuator that tracks a
desired elongation via the shared PD law (kp=50, kd=2).  The body always
feels plain viscous ground drag.  The foot's ground interaction is keyed to
the crawler's shape:

* extended (elongation above rest): the foot is lifted and feels no ground
  force, so it can be repositioned quickly and almost for free;
* contracted (at or below rest): the foot is planted.  While planted it
  creeps forward against light viscous drag but resists back-slide with a
  bounded anchor force ``grip * anchor_force * tanh(v / anchor_vel_scale)``.
  The grip follows the time since planting: it needs
  ``anchor_engage_tau`` seconds of contact to set (suction) and fades over
  ``anchor_fatigue_tau`` seconds of sustained contact, so it must be
  refreshed by lifting off and re-planting.

Reeling the body forward against the anchor transports the crawler; pulling
harder than the anchor can hold, re-planting before the grip has set, or
squatting in place until the grip fatigues all lose ground.  Deep, quick
lifted half-cycles paired with slow planted ones are therefore genuinely
better than any single-rate gait, which is exactly the asymmetry the
dual-rate trajectory generator can express.

Integration is semi-implicit Euler at 1 ms; reward per control step is the
displacement of the midpoint.  The per-substep energy identity

    actuator work + external work - drag dissipation - kinetic change = 0

holds exactly when work is accumulated against midpoint velocities
``(v + v') / 2`` (a property of the integrator, not an approximation); the
running residual is exposed for audits.

With ``anchor_force=0``, ``foot_lift=False`` and equal body/foot drag (the
symmetric test configuration) total momentum obeys ``P' = (1 - c dt) P``
exactly, so a crawler started at rest can never acquire net momentum,
whatever the actuation.

Observation layout: (joint position q = elongation - rest length, joint
rate, body velocity, foot velocity).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..pd import PDGains
from .base import PHYSICS_DT, Environment, EnvSpec, EpisodeOverError, StepResult

log = logging.getLogger(__name__)

REST_LENGTH = 1.0
MASS = 1.0
DRAG_BODY = 1.0
DRAG_FOOT = 0.5
ANCHOR_FORCE = 4.0
ANCHOR_ENGAGE_TAU = 0.25
ANCHOR_FATIGUE_TAU = 2.0
ANCHOR_VEL_SCALE = 0.05
PD_GAINS = PDGains(kp=50.0, kd=2.0)
STROKE_LIMIT = 2.0  # |desired elongation - rest length| bound


@dataclass(frozen=True)
class CrawlerState:
    x1: float  # body
    x2: float  # foot
    v1: float
    v2: float
    grip: float  # anchor engagement in [0, 1]
    t: float


class Crawler(Environment):
    """1-joint crawler; the action is the desired elongation minus rest length."""

    force_dim = 1

    def __init__(
        self,
        control_period: float = 0.05,
        episode_horizon: float = 20.0,
        drag_body: float = DRAG_BODY,
        drag_foot: float = DRAG_FOOT,
        anchor_force: float = ANCHOR_FORCE,
        anchor_engage_tau: float = ANCHOR_ENGAGE_TAU,
        anchor_fatigue_tau: float = ANCHOR_FATIGUE_TAU,
        foot_lift: bool = True,
    ):
        self.spec = EnvSpec(
            joint_count=1,
            obs_dim=4,
            control_period=control_period,
            episode_horizon=episode_horizon,
            actuation_mode="position",
            action_low=-STROKE_LIMIT,
            action_high=STROKE_LIMIT,
        )
        self.gains = PD_GAINS
        self._c_body = float(drag_body)
        self._c_foot = float(drag_foot)
        self._anchor = float(anchor_force)
        self._tau_engage = float(anchor_engage_tau)
        self._tau_fatigue = float(anchor_fatigue_tau)
        self._lift = bool(foot_lift)
        self._force_queue: list[float] = []
        self.reset(0)

    def reset(self, seed: int = 0) -> np.ndarray:
        # Starts at rest, freshly planted, regardless of seed; the seed is
        # accepted for interface parity with stochastic environments.
        self._x1, self._x2 = -0.5 * REST_LENGTH, 0.5 * REST_LENGTH
        self._v1, self._v2 = 0.0, 0.0
        self._planted = True
        self._contact_time = 0.0
        self._t = 0.0
        self._steps = 0
        self._done = False
        self._force_queue = []
        self.last_energy_residual = 0.0
        self.episode_energy_residual = 0.0
        self.actuator_work = 0.0
        self.external_work = 0.0
        self.drag_dissipation = 0.0
        return self._observe()

    def _grip(self) -> float:
        if not self._planted:
            return 0.0
        s = self._contact_time
        return (1.0 - math.exp(-s / self._tau_engage)) * math.exp(-s / self._tau_fatigue)

    @property
    def state(self) -> CrawlerState:
        return CrawlerState(
            self._x1, self._x2, self._v1, self._v2, self._grip(), self._t
        )

    def _observe(self) -> np.ndarray:
        q = self._x2 - self._x1 - REST_LENGTH
        return np.array([q, self._v2 - self._v1, self._v1, self._v2])

    def apply_external_force(self, force, duration_steps: int = 1) -> None:
        force = np.atleast_1d(np.asarray(force, dtype=float))
        self._force_queue = [float(force[0])] * int(duration_steps)

    def step(self, action) -> StepResult:
        if self._done:
            raise EpisodeOverError("episode is over; call reset()")
        q_des = float(self._check_action(action)[0])
        f_ext = self._force_queue.pop(0) if self._force_queue else 0.0

        x1, x2, v1, v2 = self._x1, self._x2, self._v1, self._v2
        planted = self._planted
        contact_time = self._contact_time
        tau_e, tau_f = self._tau_engage, self._tau_fatigue
        dt = PHYSICS_DT
        kp, kd = self.gains.kp, self.gains.kd
        com_before = 0.5 * (x1 + x2)
        work_act = work_ext = dissipation = 0.0
        ke_before = 0.5 * MASS * (v1 * v1 + v2 * v2)
        violated = False

        for _ in range(self.spec.substeps_per_control):
            q = x2 - x1 - REST_LENGTH
            q_dot = v2 - v1
            # Shared PD law (same expression as pd.compute_torque, inlined
            # because it runs 20k times per episode).
            f = kp * (q_des - q) - kd * q_dot
            drag1 = -self._c_body * v1
            if self._lift and q > 0.0:
                planted = False
                drag2 = 0.0
            else:
                if not planted:
                    planted = True
                    contact_time = 0.0
                else:
                    contact_time += dt
                drag2 = -self._c_foot * v2
                if v2 <= 0.0 and self._anchor > 0.0:
                    grip = (1.0 - math.exp(-contact_time / tau_e)) * math.exp(
                        -contact_time / tau_f
                    )
                    drag2 -= grip * self._anchor * math.tanh(v2 / ANCHOR_VEL_SCALE)
            a1 = (-f + drag1 + f_ext) / MASS
            a2 = (f + drag2) / MASS
            v1_new = v1 + a1 * dt
            v2_new = v2 + a2 * dt
            x1 += v1_new * dt
            x2 += v2_new * dt
            mid1 = 0.5 * (v1 + v1_new)
            mid2 = 0.5 * (v2 + v2_new)
            work_act += f * (mid2 - mid1) * dt
            work_ext += f_ext * mid1 * dt
            dissipation -= (drag1 * mid1 + drag2 * mid2) * dt
            v1, v2 = v1_new, v2_new
            # State invariant: masses may close at most the full stroke,
            # i.e. x2 > x1 - rest length.
            if x2 - x1 <= -REST_LENGTH or not (
                math.isfinite(x1) and math.isfinite(x2) and math.isfinite(v1) and math.isfinite(v2)
            ):
                violated = True
                break

        self._x1, self._x2, self._v1, self._v2 = x1, x2, v1, v2
        self._planted = planted
        self._contact_time = contact_time
        self._t += self.spec.control_period
        self._steps += 1
        self.actuator_work += work_act
        self.external_work += work_ext
        self.drag_dissipation += dissipation
        ke_after = 0.5 * MASS * (v1 * v1 + v2 * v2)
        self.last_energy_residual = work_act + work_ext - dissipation - (ke_after - ke_before)
        self.episode_energy_residual += self.last_energy_residual

        if violated:
            log.error("crawler state invariant violated at t=%.3f; terminating", self._t)
            self._done = True
            return StepResult(self._observe(), 0.0, terminated=True, truncated=False)

        reward = 0.5 * (x1 + x2) - com_before
        truncated = self._steps >= self.spec.episode_steps
        self._done = truncated
        return StepResult(self._observe(), reward, terminated=False, truncated=truncated)
