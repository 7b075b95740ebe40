"""Rotations, forward kinematics and Jacobians of the quadrotor + 2-link arm.

Frame conventions
-----------------
* World frame is z-up.  The body attitude uses ZYX (yaw, pitch, roll) angles
  ``Phi_b = (psi, theta, phi)`` and ``R_b = Rz(psi) Ry(theta) Rx(phi)``.
* The arm hangs straight down (-z_b) at ``theta1 = theta2 = 0``.  Joint 1 sits
  ``L0`` below the body origin and turns about x_b; joint 2 sits ``L1``
  further along link 1 and turns about link 1's y axis.  Equivalent DH table
  (base frame rotated so that z_0 = x_b)::

      joint   a     alpha    d    theta
        1     L1    pi/2     0    theta1 - pi/2
        2     L2    0        0    theta2

  The end-effector frame is ``R^b_e = Rx(theta1) Ry(theta2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GimbalSingularity
from .params import RobotParams

GIMBAL_MARGIN = 0.05

_EX = np.array([1.0, 0.0, 0.0])
_EZ = np.array([0.0, 0.0, 1.0])


def skew(a) -> np.ndarray:
    """Matrix with ``skew(a) @ b == cross(a, b)``."""
    return np.array([[0.0, -a[2], a[1]],
                     [a[2], 0.0, -a[0]],
                     [-a[1], a[0], 0.0]])


def cross(a, b) -> np.ndarray:
    """3-vector cross product (np.cross is slow for single small vectors)."""
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_euler(psi: float, theta: float, phi: float) -> np.ndarray:
    """Rotation matrix of ZYX (yaw, pitch, roll) angles."""
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)
    return np.array([
        [cps * cth, sph * sth * cps - sps * cph, sps * sph + cps * sth * cph],
        [sps * cth, cps * cph + sps * sth * sph, sps * sth * cph - cps * sph],
        [-sth, cth * sph, cth * cph],
    ])


def check_gimbal(theta: float, margin: float = GIMBAL_MARGIN) -> None:
    if not abs(theta) < math.pi / 2 - margin:
        raise GimbalSingularity(f"pitch {theta:.6g} rad within {margin} rad of +/-pi/2")


def euler_rate_matrix(psi: float, theta: float, phi: float = 0.0, *, check: bool = True) -> np.ndarray:
    """``T`` with ``omega_world = T @ (psi_dot, theta_dot, phi_dot)``.

    Independent of roll; ``phi`` is accepted so the signature matches the
    other attitude helpers.
    """
    if check:
        check_gimbal(theta)
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    return np.array([
        [0.0, -sps, cps * cth],
        [0.0, cps, sps * cth],
        [1.0, 0.0, -sth],
    ])


def euler_from_rotation(R: np.ndarray, margin: float = GIMBAL_MARGIN) -> np.ndarray:
    """ZYX angles (psi, theta, phi) of ``R`` on the branch |theta| <= pi/2."""
    theta = math.atan2(-R[2, 0], math.hypot(R[0, 0], R[1, 0]))
    check_gimbal(theta, margin)
    psi = math.atan2(R[1, 0], R[0, 0])
    phi = math.atan2(R[2, 1], R[2, 2])
    return np.array([psi, theta, phi])


def euler_rate_inverse(psi: float, theta: float) -> np.ndarray:
    """Inverse of :func:`euler_rate_matrix` (with the gimbal check)."""
    check_gimbal(theta)
    cps, sps = math.cos(psi), math.sin(psi)
    cth, tth = math.cos(theta), math.tan(theta)
    return np.array([
        [cps * tth, sps * tth, 1.0],
        [-sps, cps, 0.0],
        [cps / cth, sps / cth, 0.0],
    ])


@dataclass(frozen=True)
class ArmGeometry:
    """Arm points and directions in body coordinates for given joint angles.

    ``o1``/``o2`` are the joint origins, ``u1``/``u2`` the unit link directions
    (pointing away from the body), ``a1``/``a2`` the joint axes.  ``du1``,
    ``du2`` and ``do2`` are 3x2 derivatives with respect to (theta1, theta2).
    """

    o1: np.ndarray
    o2: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    du1: np.ndarray
    du2: np.ndarray
    do2: np.ndarray
    p_eb: np.ndarray
    dp_eb: np.ndarray
    R_be: np.ndarray


def arm_geometry(theta1: float, theta2: float, params: RobotParams) -> ArmGeometry:
    c1, s1 = math.cos(theta1), math.sin(theta1)
    c2, s2 = math.cos(theta2), math.sin(theta2)
    o1 = np.array([0.0, 0.0, -params.L0])
    a1 = _EX
    a2 = np.array([0.0, c1, s1])
    u1 = np.array([0.0, s1, -c1])
    u2 = np.array([-s2, c2 * s1, -c1 * c2])
    o2 = o1 + params.L1 * u1
    p_eb = o2 + params.L2 * u2

    du1 = np.zeros((3, 2))
    du1[:, 0] = a2  # a1 x u1
    du2 = np.column_stack([cross(a1, u2), cross(a2, u2)])
    do2 = params.L1 * du1
    dp_eb = do2 + params.L2 * du2
    R_be = np.array([
        [c2, 0.0, s2],
        [s1 * s2, c1, -s1 * c2],
        [-c1 * s2, s1, c1 * c2],
    ])
    return ArmGeometry(o1, o2, u1, u2, a1, a2, du1, du2, do2, p_eb, dp_eb, R_be)


def manipulator_jacobian(theta1: float, theta2: float, params: RobotParams) -> np.ndarray:
    """6x2 Jacobian of the end-effector twist relative to the body, in body axes."""
    g = arm_geometry(theta1, theta2, params)
    J = np.zeros((6, 2))
    J[:3, 0] = cross(g.a1, g.p_eb - g.o1)
    J[:3, 1] = cross(g.a2, g.p_eb - g.o2)
    J[3:, 0] = g.a1
    J[3:, 1] = g.a2
    return J


@dataclass(frozen=True)
class TaskPose:
    """End-effector position ``p`` [m], ZYX angles ``Phi`` [rad] and their rates."""

    p: np.ndarray
    Phi: np.ndarray
    dp: np.ndarray
    dPhi: np.ndarray
    R: np.ndarray

    @property
    def chi(self) -> np.ndarray:
        return np.concatenate([self.p, self.Phi])

    @property
    def dchi(self) -> np.ndarray:
        return np.concatenate([self.dp, self.dPhi])


def forward_kinematics(q, params: RobotParams, qd=None) -> TaskPose:
    """End-effector pose for generalized coordinates ``q`` (rates if ``qd`` given)."""
    q = np.asarray(q, dtype=float)
    R_b = rotation_from_euler(q[3], q[4], q[5])
    g = arm_geometry(q[6], q[7], params)
    p = q[:3] + R_b @ g.p_eb
    R_e = R_b @ g.R_be
    Phi = euler_from_rotation(R_e)
    if qd is None:
        dchi = np.zeros(6)
    else:
        dchi = task_rates(q, qd, params)
    return TaskPose(p, Phi, dchi[:3], dchi[3:], R_e)


@dataclass(frozen=True)
class JacobianSet:
    J_beb: np.ndarray    # 6x2, arm twist in body axes
    J_b: np.ndarray      # 6x6
    J_eb: np.ndarray     # 6x2, arm twist in world axes
    J_eta: np.ndarray    # 6x4 (x, y, z, psi)
    J_sigma: np.ndarray  # 6x2 (theta, phi)
    J_zeta: np.ndarray   # 6x6 (x, y, z, psi, theta1, theta2)
    Q_b: np.ndarray
    Q_e: np.ndarray
    T_b: np.ndarray
    Phi_e: np.ndarray

    @property
    def geometric(self) -> np.ndarray:
        """6x8 map from qd to the world twist (p_e dot, omega_e), columns in q order."""
        return np.hstack([self.J_eta, self.J_sigma, self.J_eb])

    @property
    def analytic(self) -> np.ndarray:
        """6x8 map from qd to chi_e dot."""
        return task_jacobian_from(self)


def jacobians(q, params: RobotParams) -> JacobianSet:
    q = np.asarray(q, dtype=float)
    psi, theta, phi = q[3:6]
    R_b = rotation_from_euler(psi, theta, phi)
    T_b = euler_rate_matrix(psi, theta, phi)
    g = arm_geometry(q[6], q[7], params)

    J_beb = np.zeros((6, 2))
    J_beb[:3, 0] = cross(g.a1, g.p_eb - g.o1)
    J_beb[:3, 1] = cross(g.a2, g.p_eb - g.o2)
    J_beb[3:, 0] = g.a1
    J_beb[3:, 1] = g.a2

    J_b = np.eye(6)
    J_b[:3, 3:] = -skew(R_b @ g.p_eb)
    J_eb = np.zeros((6, 2))
    J_eb[:3] = R_b @ J_beb[:3]
    J_eb[3:] = R_b @ J_beb[3:]

    Q_b = np.eye(6)
    Q_b[3:, 3:] = T_b
    JQ = J_b @ Q_b
    J_eta = JQ[:, :4]
    J_sigma = JQ[:, 4:]
    J_zeta = np.hstack([J_eta, J_eb])

    Phi_e = euler_from_rotation(R_b @ g.R_be)
    Q_e = np.eye(6)
    Q_e[3:, 3:] = euler_rate_matrix(Phi_e[0], Phi_e[1], Phi_e[2])
    return JacobianSet(J_beb, J_b, J_eb, J_eta, J_sigma, J_zeta, Q_b, Q_e, T_b, Phi_e)


def task_jacobian_from(jac: JacobianSet) -> np.ndarray:
    Qinv = np.eye(6)
    Qinv[3:, 3:] = euler_rate_inverse(jac.Phi_e[0], jac.Phi_e[1])
    return Qinv @ jac.geometric


def task_jacobian(q, params: RobotParams) -> np.ndarray:
    """6x8 analytic Jacobian, ``chi_e dot = J @ qd``."""
    return task_jacobian_from(jacobians(q, params))


def task_rates(q, qd, params: RobotParams) -> np.ndarray:
    """``chi_e dot = Q_e^-1 (J_zeta zeta_dot + J_sigma sigma_dot)``."""
    jac = jacobians(q, params)
    qd = np.asarray(qd, dtype=float)
    zeta_d = qd[[0, 1, 2, 3, 6, 7]]
    sigma_d = qd[4:6]
    v_e = jac.J_zeta @ zeta_d + jac.J_sigma @ sigma_d
    out = v_e.copy()
    out[3:] = euler_rate_inverse(jac.Phi_e[0], jac.Phi_e[1]) @ v_e[3:]
    return out


ZETA_INDEX = np.array([0, 1, 2, 3, 6, 7])
SIGMA_INDEX = np.array([4, 5])
