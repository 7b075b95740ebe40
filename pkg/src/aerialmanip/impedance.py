"""Task-space impedance outer loop.

    chi_dd_des = chi_dd_r + Scd (chi_r - chi) + Dcd (chi_d_r - chi_d) - F_e_hat

is mapped to the controlled coordinates ``zeta = (x, y, z, psi, theta1, theta2)``
through the task Jacobian, with pitch and roll ``sigma = (theta, phi)``
used as intermediate inputs that steer the horizontal thrust.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ActuatorInput, saturate
from .errors import (
    AllocationSingular,
    NearSingularJacobian,
    UnstableImpedanceConfig,
    VerticalThrustTooSmall,
)
from .kinematics import JacobianSet

SCD_DEFAULT = (20.0, 20.0, 30.0, 50.0, 100.0, 500.0)
DCD_DEFAULT = (15.0, 15.0, 25.0, 100.0, 100.0, 100.0)

DLS_THRESHOLD = 1e-3
DLS_DAMPING = 1e-2
THRUST_GUARD = 1.0
ATTITUDE_CLAMP = 0.5


@dataclass
class ImpedanceParams:
    Scd: np.ndarray = field(default_factory=lambda: np.array(SCD_DEFAULT))
    Dcd: np.ndarray = field(default_factory=lambda: np.array(DCD_DEFAULT))

    def __post_init__(self):
        self.Scd = np.broadcast_to(np.asarray(self.Scd, float), (6,)).copy()
        self.Dcd = np.broadcast_to(np.asarray(self.Dcd, float), (6,)).copy()
        if not (np.all(np.isfinite(self.Scd)) and np.all(np.isfinite(self.Dcd))):
            raise ValueError("impedance gains must be finite")


@dataclass
class TaskReference:
    chi: np.ndarray
    dchi: np.ndarray
    ddchi: np.ndarray


def impedance_accel(ref: TaskReference, chi_e, dchi_e, F_hat, p: ImpedanceParams) -> np.ndarray:
    return (ref.ddchi + p.Scd * (ref.chi - np.asarray(chi_e))
            + p.Dcd * (ref.dchi - np.asarray(dchi_e)) - np.asarray(F_hat))


@dataclass
class ErrorDynamicsReport:
    eigenvalues: np.ndarray
    slowest: float  # largest (least negative) real part
    A: np.ndarray


def error_dynamics_matrix(p: ImpedanceParams) -> np.ndarray:
    A = np.zeros((12, 12))
    A[:6, 6:] = np.eye(6)
    A[6:, :6] = -np.diag(p.Scd)
    A[6:, 6:] = -np.diag(p.Dcd)
    return A


def error_dynamics_check(p: ImpedanceParams) -> ErrorDynamicsReport:
    """Eigen-analysis of the task error dynamics; raises unless all modes are stable."""
    A = error_dynamics_matrix(p)
    eig = np.linalg.eigvals(A)
    slowest = float(np.max(eig.real))
    if not slowest < 0:
        raise UnstableImpedanceConfig(f"error dynamics not Hurwitz (max real part {slowest:.3g})")
    return ErrorDynamicsReport(eig, slowest, A)


def _damped_inverse(J):
    """Regular inverse, or the damped least-squares inverse near a singularity."""
    smin = np.linalg.svd(J, compute_uv=False)[-1]
    if smin < DLS_THRESHOLD:
        n = J.shape[1]
        return np.linalg.solve(J.T @ J + DLS_DAMPING**2 * np.eye(n), J.T), True
    return np.linalg.inv(J), False


POSITION_ROWS = slice(0, 3)


def task_to_joint(ddchi_des, dchi_r, zeta_d, sigma_d, sigma_dd, jac: JacobianSet,
                  jac_prev: JacobianSet | None, dt: float, *, strict: bool = False,
                  exact_position: bool = True):
    """Desired ``zeta`` accelerations for a desired task acceleration.

    Time derivatives of ``J_zeta``, ``J_sigma`` and ``Q_e`` are one-step backward
    differences against ``jac_prev`` (zero on the first call).  Returns
    ``(zeta_dd_des, used_dls)``; with ``strict=True`` a near-singular
    ``J_zeta`` raises :class:`NearSingularJacobian` instead.

    With ``exact_position=False`` the pitch/roll terms and the arm-joint
    columns are left out of the three position rows.  The attitude moves the end effector against the
    body (arm below the rotor plane), so cancelling them exactly makes the
    remaining attitude dynamics unstable; see :func:`position_zero_dynamics`.
    """
    if jac_prev is None:
        dJz = np.zeros((6, 6))
        dJs = np.zeros((6, 2))
        dQe = np.zeros((6, 6))
    else:
        dJz = (jac.J_zeta - jac_prev.J_zeta) / dt
        dJs = (jac.J_sigma - jac_prev.J_sigma) / dt
        dQe = (jac.Q_e - jac_prev.Q_e) / dt
    coupling = jac.J_sigma @ sigma_dd + dJs @ sigma_d
    Jz = jac.J_zeta
    if not exact_position:
        coupling[POSITION_ROWS] = 0.0
        Jz = Jz.copy()
        Jz[POSITION_ROWS, 4:] = 0.0
        dJz = dJz.copy()
        dJz[POSITION_ROWS, 4:] = 0.0
    rhs = jac.Q_e @ ddchi_des + dQe @ dchi_r - dJz @ zeta_d - coupling
    Jinv, used_dls = _damped_inverse(Jz)
    if used_dls and strict:
        raise NearSingularJacobian("J_zeta is near singular")
    return Jinv @ rhs, used_dls


def position_zero_dynamics(arm_drop: float, gravity: float = 9.81) -> float:
    """Unstable zero ``sqrt(g/l)`` (rad/s) from pitch to end-effector position.

    ``arm_drop`` is the end-effector distance below the body centre.  With
    thrust-driven translation ``x_e = x - l*theta`` and ``xdd = g*theta``.
    """
    if not arm_drop > 0:
        return 0.0
    return math.sqrt(gravity / arm_drop)


def damping_velocity(dchi, jac: JacobianSet, zeta_d) -> np.ndarray:
    """Task velocity whose position rows only carry the body translation and yaw rates.

    Pitch/roll and joint rates swing the end effector around the body; damping
    on them through the thrust direction is positive feedback on the attitude.
    """
    v = np.array(dchi, dtype=float)
    zeta_d = np.asarray(zeta_d, float)
    v[POSITION_ROWS] = jac.J_zeta[POSITION_ROWS, :4] @ zeta_d[:4]
    return v


@dataclass
class AttitudeSetpoint:
    theta: float
    phi: float
    held: bool = False

    @property
    def sigma(self) -> np.ndarray:
        return np.array([self.theta, self.phi])


def attitude_setpoint(tau_zeta, psi: float, eps: float = THRUST_GUARD,
                      clamp: float = ATTITUDE_CLAMP) -> AttitudeSetpoint:
    """Pitch/roll setpoint that tilts the collective thrust toward the demanded force."""
    fz = float(tau_zeta[2])
    if not abs(fz) > eps:
        raise VerticalThrustTooSmall(f"vertical force {fz:.3g} N within guard {eps} N")
    c, s = math.cos(psi), math.sin(psi)
    fx, fy = float(tau_zeta[0]), float(tau_zeta[1])
    theta = (c * fx + s * fy) / fz
    phi = (s * fx - c * fy) / fz
    return AttitudeSetpoint(float(np.clip(theta, -clamp, clamp)), float(np.clip(phi, -clamp, clamp)))


def horizontal_force(sp: AttitudeSetpoint, fz: float, psi: float) -> np.ndarray:
    """Horizontal force ``(fx, fy)`` implied by a (clamped) setpoint; inverse of :func:`attitude_setpoint`."""
    c, s = math.cos(psi), math.sin(psi)
    return fz * np.array([c * sp.theta + s * sp.phi, s * sp.theta - c * sp.phi])


def attitude_pd(sigma_r, sigma, sigma_d, Kp, Kd) -> np.ndarray:
    return (np.asarray(Kp) * (np.asarray(sigma_r) - np.asarray(sigma))
            - np.asarray(Kd) * np.asarray(sigma_d))


def allocation_wrench(tau_zeta, tau_sigma) -> np.ndarray:
    """Rows of ``B6``: (z, psi, theta, phi, theta1, theta2)."""
    return np.array([tau_zeta[2], tau_zeta[3], tau_sigma[0], tau_sigma[1],
                     tau_zeta[4], tau_zeta[5]], dtype=float)


@dataclass
class Allocation:
    actuator: ActuatorInput
    u_raw: np.ndarray


def allocate(tau_zeta, tau_sigma, B6) -> Allocation:
    """Solve ``B6 u = w`` for the rotor thrusts and servo torques, then saturate."""
    w = allocation_wrench(tau_zeta, tau_sigma)
    B6 = np.asarray(B6, float)
    if not np.linalg.cond(B6) < 1e12:
        raise AllocationSingular("allocation matrix is singular")
    u = np.linalg.solve(B6, w)
    return Allocation(saturate(u), u)
