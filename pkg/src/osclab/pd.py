"""Proportional-derivative conversion of desired positions to torques.

The law is ``tau = kp * (q_des - q) - kd * qdot`` (desired velocity treated
as zero), optionally clamped to a symmetric torque limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PDGains:
    kp: float
    kd: float
    torque_limit: float | None = None

    def __post_init__(self):
        if self.kp < 0.0 or self.kd < 0.0:
            raise ValueError("gains must be non-negative")
        if self.torque_limit is not None and not self.torque_limit > 0.0:
            raise ValueError("torque limit must be positive when set")


def compute_torque(
    gains: PDGains,
    q_des: np.ndarray,
    q: np.ndarray,
    q_dot: np.ndarray,
) -> np.ndarray:
    """Torque command per joint, clamped when a limit is configured."""
    q_des = np.asarray(q_des, dtype=float)
    q = np.asarray(q, dtype=float)
    q_dot = np.asarray(q_dot, dtype=float)
    if not (q_des.shape == q.shape == q_dot.shape):
        raise ValueError("q_des, q and q_dot must have identical shapes")
    tau = gains.kp * (q_des - q) - gains.kd * q_dot
    if gains.torque_limit is not None:
        tau = np.clip(tau, -gains.torque_limit, gains.torque_limit)
    return tau
