import math

import numpy as np
import pytest

from aerialmanip.dynamics import control_matrices
from aerialmanip.errors import (
    AllocationSingular,
    NearSingularJacobian,
    UnstableImpedanceConfig,
    VerticalThrustTooSmall,
)
from aerialmanip.impedance import (
    ImpedanceParams,
    TaskReference,
    allocate,
    allocation_wrench,
    attitude_pd,
    attitude_setpoint,
    damping_velocity,
    error_dynamics_check,
    error_dynamics_matrix,
    horizontal_force,
    impedance_accel,
    position_zero_dynamics,
    task_to_joint,
)
from aerialmanip.kinematics import forward_kinematics, jacobians, task_rates
from aerialmanip.params import GRAVITY

from .conftest import random_state

ZETA = [0, 1, 2, 3, 6, 7]


def ref(chi=None, dchi=None, ddchi=None):
    z = np.zeros(6)
    return TaskReference(z if chi is None else np.asarray(chi, float),
                         z if dchi is None else np.asarray(dchi, float),
                         z if ddchi is None else np.asarray(ddchi, float))


def test_impedance_accel_examples():
    p = ImpedanceParams()
    dd = np.array([0.1, -0.2, 0.3, 0.0, 1.0, 2.0])
    r = ref(ddchi=dd)
    assert np.array_equal(impedance_accel(r, np.zeros(6), np.zeros(6), np.zeros(6), p), dd)
    a = impedance_accel(ref(), [-0.1, 0, 0, 0, 0, 0], np.zeros(6), np.zeros(6), p)
    assert a[0] == pytest.approx(2.0)
    F = np.arange(6.0)
    assert np.allclose(impedance_accel(r, np.zeros(6), np.zeros(6), F, p), dd - F)


def test_error_dynamics_table_gains():
    rep = error_dynamics_check(ImpedanceParams())
    assert np.all(rep.eigenvalues.real < 0)
    # each axis is s^2 + D s + S; the slow root is (-D + sqrt(D^2 - 4S)) / 2 when real
    p = ImpedanceParams()
    slow = [np.max(np.roots([1.0, d, k]).real) for k, d in zip(p.Scd, p.Dcd)]
    assert rep.slowest == pytest.approx(max(slow), rel=1e-12)


def test_error_dynamics_rejects_marginal_mode():
    with pytest.raises(UnstableImpedanceConfig):
        error_dynamics_check(ImpedanceParams(Scd=[20, 20, 0, 50, 100, 500]))


def test_error_dynamics_scalar_roots():
    k, d = 7.0, 3.0
    eig = np.linalg.eigvals(error_dynamics_matrix(ImpedanceParams(Scd=k, Dcd=d)))
    roots = np.roots([1, d, k])
    for r in roots:
        assert np.min(np.abs(eig - r)) < 1e-12


def test_task_to_joint_static_hover(params):
    jac = jacobians(np.zeros(8), params)
    zdd, dls = task_to_joint(np.zeros(6), np.zeros(6), np.zeros(6), np.zeros(2), np.zeros(2), jac, None, 1e-3)
    assert np.array_equal(zdd, np.zeros(6)) and not dls


def test_task_to_joint_pure_z(params):
    jac = jacobians(np.zeros(8), params)
    zdd, _ = task_to_joint([0, 0, 1.5, 0, 0, 0], np.zeros(6), np.zeros(6), np.zeros(2), np.zeros(2),
                           jac, None, 1e-3)
    assert zdd[2] == pytest.approx(1.5)
    assert np.abs(np.delete(zdd, 2)).max() < 1e-12


def integrate_feedforward(params, dt, T=1.0):
    """Follow a task trajectory on the ideal decoupled plant using only feedforward."""
    def zeta_traj(t):
        return np.array([0.2 * t, 0.1 * math.sin(t), 1 + 0.05 * t * t, 0.3 * math.sin(0.5 * t),
                         0.4 * math.sin(t), -0.3 * math.sin(0.7 * t)])

    sigma = np.array([0.05, -0.04])

    def q_of(zeta):
        q = np.zeros(8)
        q[ZETA] = zeta
        q[4:6] = sigma
        return q

    h = 1e-5

    def chi_r(t):
        return forward_kinematics(q_of(zeta_traj(t)), params).chi

    def dchi_r(t):
        return (chi_r(t + h) - chi_r(t - h)) / (2 * h)

    def ddchi_r(t):
        return (chi_r(t + h) - 2 * chi_r(t) + chi_r(t - h)) / h**2

    zeta = zeta_traj(0.0)
    zeta_d = (zeta_traj(h) - zeta_traj(-h)) / (2 * h)
    jac_prev = jacobians(q_of(zeta_traj(-dt)), params)
    for k in range(int(round(T / dt))):
        t = k * dt
        jac = jacobians(q_of(zeta), params)
        zdd, _ = task_to_joint(ddchi_r(t), dchi_r(t), zeta_d, np.zeros(2), np.zeros(2), jac, jac_prev, dt)
        jac_prev = jac
        zeta = zeta + dt * zeta_d + 0.5 * dt * dt * zdd
        zeta_d = zeta_d + dt * zdd
    return np.abs(forward_kinematics(q_of(zeta), params).chi - chi_r(T)).max()


def test_task_to_joint_kinematic_consistency(params):
    e1 = integrate_feedforward(params, 2e-3)
    e2 = integrate_feedforward(params, 1e-3)
    assert e2 < 1e-3
    assert e2 < 0.6 * e1  # error shrinks with the step


def test_task_to_joint_dls_near_singularity(params):
    # arm swung level along y_b: joint 2 turns about the link itself
    q = np.zeros(8)
    q[6] = math.pi / 2
    jac = jacobians(q, params)
    zdd, dls = task_to_joint(np.ones(6), np.zeros(6), np.zeros(6), np.zeros(2), np.zeros(2), jac, None, 1e-3)
    assert dls and np.all(np.isfinite(zdd))
    with pytest.raises(NearSingularJacobian):
        task_to_joint(np.ones(6), np.zeros(6), np.zeros(6), np.zeros(2), np.zeros(2), jac, None, 1e-3,
                      strict=True)


def test_position_zero_dynamics():
    assert position_zero_dynamics(0.185) == pytest.approx(math.sqrt(9.81 / 0.185))
    assert position_zero_dynamics(0.0) == 0.0


def test_damping_velocity_drops_swing(params, rng):
    q, qd = random_state(rng)
    jac = jacobians(q, params)
    dchi = task_rates(q, qd, params)
    v = damping_velocity(dchi, jac, qd[ZETA])
    assert np.array_equal(v[3:], dchi[3:])
    only_body = qd.copy()
    only_body[4:] = 0.0
    assert np.allclose(v[:3], task_rates(q, only_body, params)[:3])


def test_attitude_setpoint_examples():
    sp = attitude_setpoint([1, 0, 10, 0, 0, 0], 0.0)
    assert (sp.theta, sp.phi) == (0.1, 0.0)
    sp = attitude_setpoint([0, 1, 10, 0, 0, 0], 0.0)
    assert (sp.theta, sp.phi) == (0.0, -0.1)
    sp = attitude_setpoint([1, 0, 10, 0, 0, 0], math.pi / 2)
    assert sp.theta == pytest.approx(0.0, abs=1e-16) and sp.phi == pytest.approx(0.1)


def test_attitude_setpoint_guard_and_clamp():
    with pytest.raises(VerticalThrustTooSmall):
        attitude_setpoint([1, 0, 0.5, 0, 0, 0], 0.0)
    sp = attitude_setpoint([100, -100, 10, 0, 0, 0], 0.0)
    assert sp.theta == 0.5 and sp.phi == 0.5


def test_attitude_setpoint_homogeneous(rng):
    for _ in range(200):
        tau = rng.normal(size=6)
        tau[2] = rng.uniform(2, 20)
        psi = rng.uniform(-3, 3)
        base = attitude_setpoint(tau, psi, clamp=10.0)
        for k in (0.25, 2.0, 8.0, 1024.0):
            sp = attitude_setpoint(k * tau, psi, eps=0.0, clamp=10.0)
            assert (sp.theta, sp.phi) == (base.theta, base.phi)
        sp = attitude_setpoint(3.7 * tau, psi, clamp=10.0)
        assert sp.theta == pytest.approx(base.theta, rel=1e-14, abs=1e-16)


def test_horizontal_force_inverts_setpoint(rng):
    for _ in range(50):
        tau = np.zeros(6)
        tau[:2] = rng.normal(size=2)
        tau[2] = 11.7
        psi = rng.uniform(-3, 3)
        sp = attitude_setpoint(tau, psi)
        assert np.allclose(horizontal_force(sp, tau[2], psi), tau[:2], atol=1e-13)


def test_attitude_pd_examples():
    assert np.array_equal(attitude_pd([0.2, 0.1], [0.2, 0.1], [0, 0], 20, 20), [0, 0])
    assert attitude_pd([0.1, 0], [0, 0], [0, 0], 20, 20)[0] == pytest.approx(2.0)
    assert attitude_pd([0, 0], [0, 0], [1, 0], 20, 20)[0] == -20


def test_allocation_hover(params):
    _, _, _, B6 = control_matrices(np.zeros(8), params)
    a = allocate([0, 0, params.total_mass * GRAVITY, 0, 0, 0], [0, 0], B6)
    assert a.actuator.u[:4].sum() == pytest.approx(11.74257, abs=1e-5)
    assert np.allclose(a.actuator.u[4:], 0)
    z = allocate(np.zeros(6), np.zeros(2), B6)
    assert np.array_equal(z.actuator.u, np.zeros(6))


def test_allocation_round_trip(params, rng):
    for _ in range(500):
        q, _ = random_state(rng)
        _, _, _, B6 = control_matrices(q, params)
        tz, ts = rng.normal(0, 5, 6), rng.normal(0, 1, 2)
        a = allocate(tz, ts, B6)
        w = allocation_wrench(tz, ts)
        assert np.abs(B6 @ a.u_raw - w).max() < 1e-10


def test_allocation_singular():
    with pytest.raises(AllocationSingular):
        allocate(np.ones(6), np.ones(2), np.zeros((6, 6)))


def test_impedance_params_validation():
    with pytest.raises(ValueError):
        ImpedanceParams(Scd=[np.nan] * 6)
