import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from osclab.pd import PDGains, compute_torque


def test_zero_error_zero_torque():
    gains = PDGains(kp=10.0, kd=1.0)
    q = np.array([0.2, -0.4])
    tau = compute_torque(gains, q, q, np.zeros(2))
    assert np.array_equal(tau, np.zeros(2))


def test_swimmer_gains_arithmetic():
    # kp=7.0, kd=0.7, error 0.1 at rest -> 0.7
    gains = PDGains(kp=7.0, kd=0.7)
    tau = compute_torque(gains, np.array([0.1]), np.array([0.0]), np.array([0.0]))
    assert tau[0] == pytest.approx(0.7)


def test_clamp():
    gains = PDGains(kp=1.0, kd=0.0, torque_limit=1.0)
    tau = compute_torque(gains, np.array([10.0]), np.array([0.0]), np.array([0.0]))
    assert tau[0] == 1.0


def test_dimension_mismatch():
    gains = PDGains(kp=1.0, kd=1.0)
    with pytest.raises(ValueError):
        compute_torque(gains, np.zeros(2), np.zeros(3), np.zeros(3))


def test_gain_validation():
    with pytest.raises(ValueError):
        PDGains(kp=-1.0, kd=0.0)
    with pytest.raises(ValueError):
        PDGains(kp=1.0, kd=1.0, torque_limit=0.0)


vectors = st.lists(st.floats(-10, 10), min_size=1, max_size=4)


@given(err=vectors, vel=st.floats(-5, 5), scale=st.floats(0.1, 3.0))
def test_linear_below_clamp(err, vel, scale):
    gains = PDGains(kp=4.0, kd=0.5)
    err = np.array(err)
    vel_vec = np.full_like(err, vel)
    tau = compute_torque(gains, err, np.zeros_like(err), vel_vec)
    tau_scaled = compute_torque(gains, scale * err, np.zeros_like(err), scale * vel_vec)
    np.testing.assert_allclose(tau_scaled, scale * tau, rtol=1e-12, atol=1e-12)


@given(err=vectors, vel=st.floats(-5, 5))
def test_odd_symmetry(err, vel):
    gains = PDGains(kp=4.0, kd=0.5, torque_limit=2.0)
    err = np.array(err)
    vel_vec = np.full_like(err, vel)
    tau = compute_torque(gains, err, np.zeros_like(err), vel_vec)
    tau_neg = compute_torque(gains, -err, np.zeros_like(err), -vel_vec)
    np.testing.assert_allclose(tau_neg, -tau, atol=1e-12)


@given(kp_low=st.floats(0.1, 5.0), kp_extra=st.floats(0.1, 5.0))
def test_monotone_in_kp_for_positive_error(kp_low, kp_extra):
    err = np.array([0.3])
    tau_low = compute_torque(PDGains(kp_low, 0.0), err, np.zeros(1), np.zeros(1))
    tau_high = compute_torque(PDGains(kp_low + kp_extra, 0.0), err, np.zeros(1), np.zeros(1))
    assert tau_high[0] > tau_low[0]
