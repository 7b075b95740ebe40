"""Rigid-body model ``M(q) qdd + C(q, qd) qd + G(q) + tau_w + tau_l = B(q) u``.

The body is a rigid body with diagonal inertia; the mount and both arm
links are uniform thin rods.  All energy terms are linear in the base
inertial parameters of :func:`aerialmanip.params.inertial_parameters`, so
``M`` and ``G`` are assembled as ``sum_k pi_k M_k(q)``.  ``C`` comes from
Christoffel symbols of ``M`` with central-difference partial derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fast
from .errors import NegativeSpeed, SolveFailure
from .kinematics import arm_geometry, euler_rate_matrix, rotation_from_euler, skew
from .params import (
    GRAVITY,
    MAX_JOINT_TORQUE,
    MAX_THRUST,
    RobotParams,
    inertial_parameters,
)

N_INERTIAL = 9
FD_STEP = 1e-6
# M depends only on the attitude and joint angles.
_ANGLE_IDX = (3, 4, 5, 6, 7)

_EZ = np.array([0.0, 0.0, 1.0])


def rotor_wrench(omega, params: RobotParams):
    """Thrust [N] and drag moment [N m] of each rotor for speeds ``omega`` [rad/s]."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise NegativeSpeed("rotor speeds must be non-negative")
    w2 = omega**2
    return np.asarray(params.Kf) * w2, np.asarray(params.Km) * w2


def _direction_jacobian(R, T, u, du):
    """3x8 Jacobian of the world vector ``R u(theta1, theta2)``."""
    J = np.zeros((3, 8))
    J[:, 3:6] = -skew(R @ u) @ T
    J[:, 6:] = R @ du
    return J


def _point_jacobian(R, T, r, dr):
    J = _direction_jacobian(R, T, r, dr)
    J[:, :3] = np.eye(3)
    return J


def _basis(q, params: RobotParams):
    """Per-parameter mass matrices (9, 8, 8) and gravity vectors (9, 8)."""
    R = rotation_from_euler(q[3], q[4], q[5])
    T = euler_rate_matrix(q[3], q[4], check=False)
    g = arm_geometry(q[6], q[7], params)
    Mb = np.zeros((N_INERTIAL, 8, 8))
    Gb = np.zeros((N_INERTIAL, 8))

    # body-fixed part
    Mb[0, :3, :3] = np.eye(3)
    Gb[0, 2] = GRAVITY
    cross = skew(R @ _EZ) @ T
    Mb[1, :3, 3:6] = cross
    Mb[1, 3:6, :3] = cross.T
    Gb[1, 3:6] = GRAVITY * (_EZ @ cross)
    W = R.T @ T
    for i in range(3):
        Mb[2 + i, 3:6, 3:6] = np.outer(W[i], W[i])

    # moving links: first moment along the link and transverse inertia about the joint
    Jw1 = np.zeros((3, 8))
    Jw1[:, 3:6] = T
    Jw1[:, 6] = R @ g.a1
    Jw2 = Jw1.copy()
    Jw2[:, 7] = R @ g.a2
    links = (
        (5, _point_jacobian(R, T, g.o1, np.zeros((3, 2))), Jw1, g.u1, g.du1),
        (7, _point_jacobian(R, T, g.o2, g.do2), Jw2, g.u2, g.du2),
    )
    for k, Jo, Jw, u, du in links:
        U = R @ u
        X = Jo.T @ (-skew(U)) @ Jw
        Mb[k] = X + X.T
        Mb[k + 1] = Jw.T @ (np.eye(3) - np.outer(U, U)) @ Jw
        Gb[k] = GRAVITY * (_EZ @ _direction_jacobian(R, T, u, du))
    return Mb, Gb


def mass_basis(q, params: RobotParams):
    return _basis(np.asarray(q, dtype=float), params)


def mass_basis_derivative(q, params: RobotParams, step: float = FD_STEP) -> np.ndarray:
    """Central differences ``dMb[k, i] = d M_k / d q_i`` with shape (9, 8, 8, 8)."""
    q = np.asarray(q, dtype=float)
    dMb = np.zeros((N_INERTIAL, 8, 8, 8))
    for i in _ANGLE_IDX:
        qp = q.copy()
        qm = q.copy()
        qp[i] += step
        qm[i] -= step
        dMb[:, i] = (_basis(qp, params)[0] - _basis(qm, params)[0]) / (2 * step)
    return dMb


def christoffel_matrix(dM: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """Coriolis matrix from ``dM[i] = dM/dq_i`` (first-kind Christoffel symbols)."""
    # C[k, j] = 1/2 sum_i (d_i M_kj + d_j M_ki - d_k M_ij) qd_i
    a = np.einsum("ikj,i->kj", dM, qd)
    b = np.einsum("jki,i->kj", dM, qd)
    c = np.einsum("kij,i->kj", dM, qd)
    return 0.5 * (a + b - c)


@dataclass
class DynamicsTerms:
    M: np.ndarray
    C: np.ndarray
    G: np.ndarray


def _lengths(params: RobotParams) -> np.ndarray:
    return np.array([params.L0, params.L1, params.L2])


def dynamics_terms(q, qd, params: RobotParams, inertia_scale: float = 1.0) -> DynamicsTerms:
    """``M``, ``C`` and ``G`` at ``(q, qd)``.

    ``inertia_scale`` multiplies ``M`` (and therefore ``C``) but not ``G``;
    the simulator uses it for the inertia-matrix uncertainty step.
    """
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    M, C, G = _fast.terms(q, qd, inertial_parameters(params), _lengths(params), FD_STEP)
    return DynamicsTerms(inertia_scale * M, inertia_scale * C, G)


def inertial_regressor(q, qd, qdd, params: RobotParams) -> np.ndarray:
    """8x9 matrix ``Y_i`` with ``M qdd + C qd + G = Y_i @ inertial_parameters(params)``.

    Only the geometry (lengths) of ``params`` is used.
    """
    return _fast.inertial_regressor(np.asarray(q, dtype=float), np.asarray(qd, dtype=float),
                                    np.asarray(qdd, dtype=float), _lengths(params), FD_STEP)


def mass_matrix(q, params: RobotParams) -> np.ndarray:
    return _fast.mass_matrix(np.asarray(q, dtype=float), inertial_parameters(params), _lengths(params))


def diagonal_inertia_range(params: RobotParams, attitude_limit: float = 0.5,
                           joint_limit: float = np.pi / 2, n: int = 7):
    """Min and max of each ``M_ii`` over a grid of the attitude/joint workspace."""
    pi = inertial_parameters(params)
    L = _lengths(params)
    att = np.linspace(-attitude_limit, attitude_limit, n)
    joints = np.linspace(-joint_limit, joint_limit, n)
    lo = np.full(8, np.inf)
    hi = np.full(8, -np.inf)
    q = np.zeros(8)
    for th in att:
        for ph in att:
            for t1 in joints:
                for t2 in joints:
                    q[4:] = th, ph, t1, t2
                    d = np.diag(_fast.mass_matrix(q, pi, L))
                    lo = np.minimum(lo, d)
                    hi = np.maximum(hi, d)
    return lo, hi


def kinetic_energy(q, qd, params: RobotParams) -> float:
    pi = inertial_parameters(params)
    M = np.einsum("k,kab->ab", pi, _basis(np.asarray(q, float), params)[0])
    return 0.5 * qd @ M @ qd


def potential_energy(q, params: RobotParams) -> float:
    """Gravitational potential energy, zero with the body origin at z=0 and the arm level."""
    q = np.asarray(q, dtype=float)
    pi = inertial_parameters(params)
    R = rotation_from_euler(q[3], q[4], q[5])
    g = arm_geometry(q[6], q[7], params)
    height = (pi[0] * q[2] + pi[1] * (-R[2] @ _EZ) + pi[5] * (R[2] @ g.u1)
              + pi[7] * (R[2] @ g.u2))
    return GRAVITY * height


def total_energy(q, qd, params: RobotParams) -> float:
    return kinetic_energy(q, qd, params) + potential_energy(q, params)


# body moment rows of N are ordered (yaw, pitch, roll); H expects body-axis (x, y, z)
_MOMENT_ORDER = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])


def actuation_matrix(params: RobotParams) -> np.ndarray:
    """Control matrix ``N`` (8x6) mapping (F1..F4, tau_m1, tau_m2) to body wrenches."""
    gam = params.gamma
    d = params.d
    N = np.zeros((8, 6))
    N[2, :4] = 1.0
    N[3, :4] = [gam[0], -gam[1], gam[2], -gam[3]]
    N[4, :4] = [-d, 0.0, d, 0.0]
    N[5, :4] = [0.0, -d, 0.0, d]
    N[6, 4] = 1.0
    N[7, 5] = 1.0
    return N


def control_matrices(q, params: RobotParams, actuator_scale: float = 1.0):
    """``(N, H, B, B6)`` with ``B = H N`` and ``B6`` rows z..theta2, all six columns."""
    q = np.asarray(q, dtype=float)
    R = rotation_from_euler(q[3], q[4], q[5])
    T = euler_rate_matrix(q[3], q[4], check=False)
    N = actuator_scale * actuation_matrix(params)
    H = np.zeros((8, 8))
    H[:3, :3] = R
    H[3:6, 3:6] = T.T @ R @ _MOMENT_ORDER
    H[6:, 6:] = np.eye(2)
    B = H @ N
    return N, H, B, B[2:8, :6].copy()


@dataclass
class ActuatorInput:
    u: np.ndarray
    saturated: bool = False

    @property
    def thrusts(self) -> np.ndarray:
        return self.u[:4]

    @property
    def joint_torques(self) -> np.ndarray:
        return self.u[4:]


def saturate(u) -> ActuatorInput:
    """Clamp rotor thrusts to [0, 6] N and servo torques to their limits."""
    u = np.asarray(u, dtype=float)
    lo = np.array([0.0] * 4 + [-MAX_JOINT_TORQUE[0], -MAX_JOINT_TORQUE[1]])
    hi = np.array([MAX_THRUST] * 4 + list(MAX_JOINT_TORQUE))
    clamped = np.clip(u, lo, hi)
    return ActuatorInput(clamped, bool(np.any(clamped != u)))


def forward_dynamics(q, qd, u, tau_w, tau_l, params: RobotParams, *,
                     inertia_scale: float = 1.0, actuator_scale: float = 1.0,
                     extra=None) -> np.ndarray:
    """Generalized accelerations ``M^-1 (B u - C qd - G - tau_w - tau_l)``."""
    terms = dynamics_terms(q, qd, params, inertia_scale)
    _, _, B, _ = control_matrices(q, params, actuator_scale)
    rhs = B @ np.asarray(u, float) - terms.C @ qd - terms.G - tau_w - tau_l
    if extra is not None:
        rhs = rhs + extra
    try:
        L = np.linalg.cholesky(terms.M)
    except np.linalg.LinAlgError as exc:
        raise SolveFailure("inertia matrix is not positive definite") from exc
    y = np.linalg.solve(L, rhs)
    return np.linalg.solve(L.T, y)
