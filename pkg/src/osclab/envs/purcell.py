"""Three-link planar swimmer in creeping flow.

Three rigid links of length ``2 * HALF_LENGTH`` are hinged in a chain; the
two joint angles are the actuated shape.  Each link feels anisotropic
resistive drag (density ``-xi_t (v.t)t - xi_n (v.n)n``), integrated along
the link by 5-point Gauss-Legendre quadrature, which is exact for these
polynomial integrands.  Inertia is absent: at every instant the total drag
force and torque balance the external force (zero unless a disturbance is
active), giving a 3x3 symmetric positive-definite system for the body
velocity ``(vx, vy, omega)``.  Positive definiteness is asserted every
control step via a Cholesky factorization of the batched system.

Commanded joint angles are tracked by a rate-limited first-order law
``clamp(TRACK_GAIN * (q_des - alpha), +/-RATE_LIMIT)`` integrated at 1 ms,
with the joints hard-limited to ``+/-JOINT_LIMIT``.

Because drag depends only on shape, the body-frame velocity is a function
of joint angles and joint rates alone; the pose is then a quadrature, which
we advance with a fourth-order Runge-Kutta step per physics substep so that
the zero net drift of reciprocal strokes survives discretization.

Reward per control step is the displacement of the center-link midpoint
along world x.  Observation layout: (alpha1, alpha2, rate1, rate2, heading).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .base import PHYSICS_DT, Environment, EnvSpec, EpisodeOverError, StepResult

log = logging.getLogger(__name__)

HALF_LENGTH = 0.5          # half of one link length
XI_T = 1.0                 # tangential drag density
XI_N = 2.0                 # normal drag density
TRACK_GAIN = 20.0          # first-order tracking gain, 1/s
RATE_LIMIT = 4.0           # max joint speed, rad/s
JOINT_LIMIT = 2.0 * math.pi / 3.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class PurcellSwimmerState:
    x: float
    y: float
    heading: float
    alpha1: float
    alpha2: float
    rate1: float
    rate2: float
    t: float


# Quadrature node moments per side link (interval [0, 2*HALF_LENGTH]); the
# drag integrands are polynomials in arc length, so their 5-point values
# reduce exactly to these three sums.
_SIDE_NODES = 0.5 * (2.0 * HALF_LENGTH) * (_GL_X + 1.0)
_SIDE_WEIGHTS = 0.5 * (2.0 * HALF_LENGTH) * _GL_W
_M0 = float(_SIDE_WEIGHTS.sum())
_M1 = float((_SIDE_WEIGHTS * _SIDE_NODES).sum())
_M2 = float((_SIDE_WEIGHTS * _SIDE_NODES**2).sum())
# Center link (interval [-HALF_LENGTH, HALF_LENGTH], direction x-hat): its
# odd moment vanishes, leaving constant contributions.
_C_NODES = HALF_LENGTH * _GL_X
_C_WEIGHTS = HALF_LENGTH * _GL_W
_CENTER_A_VV = np.diag([XI_T, XI_N]) * float(_C_WEIGHTS.sum())
_CENTER_A_WW = XI_N * float((_C_WEIGHTS * _C_NODES**2).sum())


def _drag_terms(alpha: np.ndarray, rates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched force/torque balance pieces in the body frame.

    Returns ``(A, b)`` with ``A`` (B, 3, 3) symmetric positive-definite and
    ``b`` (B, 3) the drag reaction to the shape motion, such that the body
    velocity solves ``A u = b + [R^T F_ext; 0]``.  The drag tensor of a link
    with unit direction d is ``xi_n I + (xi_t - xi_n) d d^T``; applying it
    analytically to the polynomial integrands keeps the arithmetic identical
    to summing the Gauss-Legendre nodes.
    """
    batch = alpha.shape[0]
    ell = HALF_LENGTH
    anis = XI_T - XI_N

    a_vv = np.broadcast_to(_CENTER_A_VV, (batch, 2, 2)).copy()
    a_vw = np.zeros((batch, 2))
    a_ww = np.full(batch, _CENTER_A_WW)
    b_v = np.zeros((batch, 2))
    b_w = np.zeros(batch)

    cos1, sin1 = np.cos(alpha[:, 0]), np.sin(alpha[:, 0])
    cos2, sin2 = np.cos(alpha[:, 1]), np.sin(alpha[:, 1])

    links = (
        # attach point c, direction d, shape-velocity direction n, joint rate
        (np.array([ell, 0.0]), np.stack([cos1, sin1], 1),
         np.stack([-sin1, cos1], 1), rates[:, 0]),
        (np.array([-ell, 0.0]), np.stack([-cos2, sin2], 1),
         np.stack([sin2, cos2], 1), rates[:, 1]),
    )
    for attach, d, n, rate in links:
        perp_c = np.array([-attach[1], attach[0]])
        perp_d = np.stack([-d[:, 1], d[:, 0]], 1)

        def apply_drag(vec):
            # (xi_n I + anis d d^T) @ vec for batched 2-vectors
            return XI_N * vec + anis * d * (d * vec).sum(axis=1, keepdims=True)

        a_vv += XI_N * _M0 * np.eye(2) + (anis * _M0) * d[:, :, None] * d[:, None, :]
        a_vw += apply_drag(_M0 * perp_c + _M1 * perp_d)
        d_dot_perpc = d @ perp_c
        a_ww += XI_N * (_M0 * float(attach @ attach) + 2.0 * _M1 * (d @ attach) + _M2) \
            + anis * _M0 * d_dot_perpc**2
        drag_n = apply_drag(n)
        b_v -= (_M1 * rate)[:, None] * drag_n
        b_w -= rate * (_M1 * (drag_n @ perp_c) + _M2 * (perp_d * drag_n).sum(axis=1))

    a = np.empty((batch, 3, 3))
    a[:, :2, :2] = a_vv
    a[:, :2, 2] = a_vw
    a[:, 2, :2] = a_vw
    a[:, 2, 2] = a_ww
    return a, np.concatenate([b_v, b_w[:, None]], axis=1)


class PurcellSwimmer(Environment):
    """Position-actuated three-link swimmer; action = desired joint angles."""

    force_dim = 2

    def __init__(self, control_period: float = 0.05, episode_horizon: float = 20.0):
        self.spec = EnvSpec(
            joint_count=2,
            obs_dim=5,
            control_period=control_period,
            episode_horizon=episode_horizon,
            actuation_mode="position",
            action_low=-JOINT_LIMIT,
            action_high=JOINT_LIMIT,
        )
        self._force_queue: list[np.ndarray] = []
        self.reset(0)

    def reset(self, seed: int = 0) -> np.ndarray:
        # Deterministic rest start; the seed is accepted for interface parity.
        self._alpha = np.zeros(2)
        self._rates = np.zeros(2)
        self._pos = np.zeros(2)
        self._heading = 0.0
        self._t = 0.0
        self._steps = 0
        self._done = False
        self._force_queue = []
        return self._observe()

    @property
    def state(self) -> PurcellSwimmerState:
        return PurcellSwimmerState(
            x=self._pos[0],
            y=self._pos[1],
            heading=self._heading,
            alpha1=self._alpha[0],
            alpha2=self._alpha[1],
            rate1=self._rates[0],
            rate2=self._rates[1],
            t=self._t,
        )

    def _observe(self) -> np.ndarray:
        return np.array(
            [self._alpha[0], self._alpha[1], self._rates[0], self._rates[1], self._heading]
        )

    def apply_external_force(self, force, duration_steps: int = 1) -> None:
        force = np.asarray(force, dtype=float).reshape(2)
        self._force_queue = [force.copy() for _ in range(int(duration_steps))]

    def _integrate_joints(self, q_des: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Euler-integrate the tracking law; returns node angles and substep rates."""
        n_sub = self.spec.substeps_per_control
        a1, a2 = self._alpha
        nodes = np.empty((n_sub + 1, 2))
        rates = np.empty((n_sub, 2))
        nodes[0] = (a1, a2)
        dt = PHYSICS_DT
        for k in range(n_sub):
            r1 = min(max(TRACK_GAIN * (q_des[0] - a1), -RATE_LIMIT), RATE_LIMIT)
            r2 = min(max(TRACK_GAIN * (q_des[1] - a2), -RATE_LIMIT), RATE_LIMIT)
            a1_new = min(max(a1 + r1 * dt, -JOINT_LIMIT), JOINT_LIMIT)
            a2_new = min(max(a2 + r2 * dt, -JOINT_LIMIT), JOINT_LIMIT)
            rates[k] = ((a1_new - a1) / dt, (a2_new - a2) / dt)
            nodes[k + 1] = (a1_new, a2_new)
            a1, a2 = a1_new, a2_new
        return nodes, rates

    def step(self, action) -> StepResult:
        if self._done:
            raise EpisodeOverError("episode is over; call reset()")
        q_des = self._check_action(action)
        force = self._force_queue.pop(0) if self._force_queue else None

        nodes, rates = self._integrate_joints(q_des)
        n_sub = self.spec.substeps_per_control
        mids = 0.5 * (nodes[:-1] + nodes[1:])
        # Stage shapes for the Runge-Kutta step: start, midpoint, end of each
        # substep, each moving at that substep's joint rates.
        stage_alpha = np.concatenate([nodes[:-1], mids, nodes[1:]])
        stage_rates = np.concatenate([rates, rates, rates])
        a_mat, b_shape = _drag_terms(stage_alpha, stage_rates)

        try:
            np.linalg.cholesky(a_mat)  # positive-definiteness assertion
        except np.linalg.LinAlgError as exc:
            raise AssertionError("drag matrix lost positive definiteness") from exc

        x_before = self._pos[0]
        dt = PHYSICS_DT
        if force is None:
            u = np.linalg.solve(a_mat, b_shape[:, :, None])[:, :, 0]
            u_start, u_mid, u_end = u[:n_sub], u[n_sub : 2 * n_sub], u[2 * n_sub :]
            w_s, w_m, w_e = u_start[:, 2], u_mid[:, 2], u_end[:, 2]
            d_theta = (dt / 6.0) * (w_s + 4.0 * w_m + w_e)
            theta_start = self._heading + np.concatenate([[0.0], np.cumsum(d_theta)[:-1]])
            th1 = theta_start
            th2 = theta_start + 0.5 * dt * w_s
            th3 = theta_start + 0.5 * dt * w_m
            th4 = theta_start + dt * w_m
            k1 = _rotate(th1, u_start[:, :2])
            k2 = _rotate(th2, u_mid[:, :2])
            k3 = _rotate(th3, u_mid[:, :2])
            k4 = _rotate(th4, u_end[:, :2])
            d_pos = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            self._heading += float(np.sum(d_theta))
            self._pos = self._pos + np.sum(d_pos, axis=0)
        else:
            # The world-frame force enters the balance through R(theta)^T, so
            # the pose couples back into the velocity solve; integrate
            # substep by substep with explicit Runge-Kutta stages.
            u_shape = np.linalg.solve(a_mat, b_shape[:, :, None])[:, :, 0]
            a_inv = np.linalg.inv(a_mat)
            theta = self._heading
            pos = self._pos.copy()

            def slope(idx: int, th: float) -> tuple[float, np.ndarray]:
                rhs = np.array(
                    [
                        math.cos(th) * force[0] + math.sin(th) * force[1],
                        -math.sin(th) * force[0] + math.cos(th) * force[1],
                        0.0,
                    ]
                )
                u = u_shape[idx] + a_inv[idx] @ rhs
                return u[2], _rotate(np.array([th]), u[None, :2])[0]

            for k in range(n_sub):
                w1, p1 = slope(k, theta)
                w2, p2 = slope(k + n_sub, theta + 0.5 * dt * w1)
                w3, p3 = slope(k + n_sub, theta + 0.5 * dt * w2)
                w4, p4 = slope(k + 2 * n_sub, theta + dt * w3)
                theta += (dt / 6.0) * (w1 + 2.0 * w2 + 2.0 * w3 + w4)
                pos += (dt / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
            self._heading = theta
            self._pos = pos

        self._alpha = nodes[-1].copy()
        self._rates = rates[-1].copy()
        self._t += self.spec.control_period
        self._steps += 1

        if not (
            np.all(np.isfinite(self._pos))
            and math.isfinite(self._heading)
            and np.all(np.isfinite(self._alpha))
        ):
            log.error("swimmer state non-finite at t=%.3f; terminating", self._t)
            self._done = True
            return StepResult(self._observe(), 0.0, terminated=True, truncated=False)

        reward = self._pos[0] - x_before
        truncated = self._steps >= self.spec.episode_steps
        self._done = truncated
        return StepResult(self._observe(), float(reward), terminated=False, truncated=truncated)


def _rotate(theta: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Rotate batched 2-vectors by batched angles."""
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([c * vec[:, 0] - s * vec[:, 1], s * vec[:, 0] + c * vec[:, 1]], axis=1)
