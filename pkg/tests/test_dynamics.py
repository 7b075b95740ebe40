import numpy as np
import pytest

from aerialmanip import dynamics as dyn
from aerialmanip.environment import EnvImpedance, WindParams
from aerialmanip.errors import NegativeSpeed, SolveFailure
from aerialmanip.impedance import allocate
from aerialmanip.params import GRAVITY, inertial_parameters
from aerialmanip.sim import Plant, ScenarioConfig

from .conftest import random_state


def test_rotor_wrench(params):
    F, M = dyn.rotor_wrench([0.0, 500.0, 0.0, 0.0], params)
    assert F[0] == 0 and M[0] == 0
    F, M = dyn.rotor_wrench([500.0] * 4, params)
    assert F[0] == pytest.approx(4.0, rel=1e-12)
    assert M[0] == pytest.approx(0.0975, rel=1e-12)
    with pytest.raises(NegativeSpeed):
        dyn.rotor_wrench([-1.0, 0, 0, 0], params)


def test_actuation_matrix(params):
    assert params.gamma[0] == pytest.approx(3.9e-7 / 1.6e-5)
    assert round(params.gamma[0], 4) == 0.0244
    N = dyn.actuation_matrix(params)
    assert N[4, 0] == -0.223
    _, H, B, B6 = dyn.control_matrices(np.zeros(8), params)
    assert np.allclose(B[2], [1, 1, 1, 1, 0, 0])
    assert np.array_equal(B6, B[2:8, :6])


def test_control_matrices_structure(params, rng):
    for _ in range(20):
        q, _ = random_state(rng)
        N, H, B, B6 = dyn.control_matrices(q, params)
        assert np.allclose(B, H @ N)
        assert np.array_equal(H[6:, 6:], np.eye(2))
        assert np.isfinite(np.linalg.cond(B6))


def test_total_mass_on_diagonal(params, rng):
    for _ in range(20):
        q, _ = random_state(rng)
        M = dyn.mass_matrix(q, params)
        assert np.allclose(np.diag(M)[:3], 1.197, atol=1e-14)


def test_gravity_at_hover(params):
    t = dyn.dynamics_terms(np.zeros(8), np.zeros(8), params)
    expected = np.zeros(8)
    expected[2] = params.total_mass * GRAVITY
    assert np.allclose(t.G, expected, atol=1e-14)


def test_gravity_is_potential_gradient(params, rng):
    h = 1e-6
    for _ in range(20):
        q, _ = random_state(rng)
        G = dyn.dynamics_terms(q, np.zeros(8), params).G
        fd = [(dyn.potential_energy(q + h * e, params) - dyn.potential_energy(q - h * e, params)) / (2 * h)
              for e in np.eye(8)]
        assert np.allclose(G, fd, atol=1e-7)


def test_no_coriolis_at_rest(params, rng):
    q, _ = random_state(rng)
    t = dyn.dynamics_terms(q, np.zeros(8), params)
    assert np.allclose(t.C @ np.zeros(8), 0)
    assert np.allclose(t.C, 0, atol=1e-12)


def test_mass_matrix_symmetric_positive_definite(params, rng):
    for _ in range(200):
        q, _ = random_state(rng, attitude=1.3, joints=3.0)
        M = dyn.mass_matrix(q, params)
        assert np.abs(M - M.T).max() < 1e-10
        assert np.linalg.eigvalsh(M)[0] > 0


def test_skew_symmetry(params, rng):
    h = 1e-6
    for _ in range(200):
        q, qd = random_state(rng)
        C = dyn.dynamics_terms(q, qd, params).C
        dM = (dyn.mass_matrix(q + h * qd, params) - dyn.mass_matrix(q - h * qd, params)) / (2 * h)
        nu = rng.normal(size=8)
        assert abs(nu @ (dM - 2 * C) @ nu) < 1e-8


def test_kinetic_energy_matches_compiled_mass_matrix(params, rng):
    # numpy basis assembly vs the compiled kernel
    for _ in range(20):
        q, qd = random_state(rng)
        M = dyn.mass_matrix(q, params)
        assert dyn.kinetic_energy(q, qd, params) == pytest.approx(0.5 * qd @ M @ qd, rel=1e-12)


def test_linear_in_inertial_parameters(params, rng):
    heavier = params.scaled(m=1.3, m2=0.8, Ix=2.0, L2=1.0)
    for _ in range(20):
        q, qd = random_state(rng)
        qdd = rng.normal(size=8)
        Y = dyn.inertial_regressor(q, qd, qdd, params)
        for p in (params, heavier):
            t = dyn.dynamics_terms(q, qd, p)
            assert np.allclose(Y @ inertial_parameters(p), t.M @ qdd + t.C @ qd + t.G, atol=1e-9)
        # superposition in the parameter vector
        a, b = inertial_parameters(params), inertial_parameters(heavier)
        assert np.allclose(Y @ (a + 2 * b), Y @ a + 2 * Y @ b)


def test_free_fall(params):
    qdd = dyn.forward_dynamics(np.zeros(8), np.zeros(8), np.zeros(6), np.zeros(8), np.zeros(8), params)
    assert qdd[2] == pytest.approx(-GRAVITY)
    assert np.abs(np.delete(qdd, 2)).max() < 1e-12


def test_hover(params):
    _, _, _, B6 = dyn.control_matrices(np.zeros(8), params)
    alloc = allocate([0, 0, params.total_mass * GRAVITY, 0, 0, 0], [0, 0], B6)
    u = alloc.actuator.u
    assert u[:4].sum() == pytest.approx(11.74257, abs=1e-5)
    qdd = dyn.forward_dynamics(np.zeros(8), np.zeros(8), u, np.zeros(8), np.zeros(8), params)
    assert np.abs(qdd).max() < 1e-12


def test_solve_failure_on_corrupted_inertia(params):
    with pytest.raises(SolveFailure):
        dyn.forward_dynamics(np.zeros(8), np.zeros(8), np.zeros(6), np.zeros(8), np.zeros(8), params,
                             inertia_scale=-1.0)


def test_saturation_clamps_and_flags():
    a = dyn.saturate([7.0, -1.0, 3.0, 3.0, 1.0, -1.0])
    assert np.array_equal(a.u, [6.0, 0.0, 3.0, 3.0, 0.7, -0.4]) and a.saturated
    assert not dyn.saturate([1.0, 1.0, 1.0, 1.0, 0.1, 0.1]).saturated


def passive_plant(q0, qd0):
    cfg = ScenarioConfig(env=EnvImpedance(Sc=0.0, Dc=0.0), wind=WindParams(Vw_z0=0.0),
                         uncertainty_factor=0.0, control_dt=1e-3, physics_substeps=4)
    plant = Plant(cfg, q0)
    plant.x[8:] = qd0
    return plant


def energy_drift(params, q0, qd0, seconds=1.0):
    plant = passive_plant(q0, qd0)
    e0 = dyn.total_energy(plant.x[:8], plant.x[8:], params)
    for k in range(int(seconds * 1000)):
        plant.advance(np.zeros(6), k * 1e-3)
    return abs(dyn.total_energy(plant.x[:8], plant.x[8:], params) - e0) / seconds


def test_passive_energy_audit(params):
    q0 = np.array([0, 0, 1.0, 0.2, 0.3, -0.2, 0.8, -0.5])
    qd0 = np.array([0.1, -0.2, 0.0, 0.5, -0.3, 0.4, 1.0, -1.5])
    assert energy_drift(params, q0, qd0) < 1e-5


def test_diagonal_inertia_range(params):
    lo, hi = dyn.diagonal_inertia_range(params, n=3)
    d0 = np.diag(dyn.mass_matrix(np.zeros(8), params))
    assert np.all(lo <= d0 + 1e-15) and np.all(d0 <= hi + 1e-15)
    assert np.all(lo > 0)
