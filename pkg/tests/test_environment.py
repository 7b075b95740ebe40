import numpy as np
import pytest

from aerialmanip.environment import (
    EnvImpedance,
    WindParams,
    contact_force,
    contact_generalized,
    wind_force,
    wind_generalized,
    wind_speed,
)
from aerialmanip.kinematics import forward_kinematics, task_jacobian

from .conftest import random_state


def test_contact_force_examples():
    env = EnvImpedance()
    assert np.array_equal(contact_force(np.zeros(6), np.zeros(6), env), np.zeros(6))
    F = contact_force([1, 0, 0, 0, 0, 0], np.zeros(6), env)
    assert np.allclose(F, [0.1, 0, 0, 0, 0, 0])
    F = contact_force(np.zeros(6), [0, 0, 2, 0, 0, 0], env)
    assert np.allclose(F, [0, 0, 0.02, 0, 0, 0])


def test_contact_rest_pose():
    env = EnvImpedance(Sc=2.0, Dc=0.0, chi0=[0, 0, 1, 0, 0, 0])
    assert np.allclose(contact_force([0, 0, 1.5, 0, 0, 0], np.zeros(6), env), [0, 0, 1, 0, 0, 0])


def test_environment_rejects_negative_gains():
    with pytest.raises(ValueError):
        EnvImpedance(Sc=-1.0)


def test_contact_generalized_zero_and_vertical(params):
    J = task_jacobian(np.zeros(8), params)
    assert np.array_equal(contact_generalized(np.zeros(6), J), np.zeros(8))
    tau = contact_generalized([0, 0, 3.0, 0, 0, 0], J)
    assert tau[2] == pytest.approx(3.0)
    # arm straight down: a vertical force has no lever arm about either joint
    assert np.allclose(tau[6:], 0, atol=1e-15)


def test_contact_generalized_virtual_work(params, rng):
    # joint rows equal dW/dq for small joint displacements at a bent pose
    h = 1e-6
    for _ in range(10):
        q, qd = random_state(rng)
        F = rng.normal(size=6)
        tau = contact_generalized(F, task_jacobian(q, params))
        for i in (0, 2, 6, 7):
            e = np.zeros(8)
            e[i] = h
            dchi = (forward_kinematics(q + e, params).chi - forward_kinematics(q - e, params).chi) / (2 * h)
            assert tau[i] == pytest.approx(F @ dchi, abs=1e-7)
        J = task_jacobian(q, params)
        assert tau @ qd == pytest.approx(F @ (J @ qd), rel=1e-12, abs=1e-12)


def test_wind_examples():
    w = WindParams(Vw_z0=3.0, z0=1.0, psi_w=0.0, Ae1=0.16, Ae2=0.032)
    assert wind_speed(2.0, w) == pytest.approx(6.0)
    fx, fy = wind_force(1.0, 0.0, 0.0, w)
    assert fx == pytest.approx(0.61 * 0.032 * 9)
    assert round(fx, 4) == 0.1757
    assert fy == 0.0
    assert wind_force(1.0, 0.3, 0.2, WindParams(Ae1=0.0, Ae2=0.0)) == (0.0, 0.0)


def test_wind_heading_and_generalized():
    w = WindParams(psi_w=np.pi / 2)
    fx, fy = wind_force(1.0, 0.0, 0.0, w)
    assert abs(fx) < 1e-15 and fy == pytest.approx(0.61 * 0.032 * 9)
    tau = wind_generalized(np.array([0, 0, 2.0, 0, 0.1, 0.0, 0, 0]), WindParams())
    assert np.all(tau[2:] == 0) and tau[0] > 0
    with pytest.raises(ValueError):
        wind_force(-1.0, 0, 0, w)
    with pytest.raises(ValueError):
        WindParams(z0=0.0)
