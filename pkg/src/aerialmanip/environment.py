"""Contact (environment impedance) and wind disturbance models.

Contact is a bilateral spring-damper on the end-effector pose,
``F_e = Sc (chi_e - chi_e0) + Dc chi_e_dot``, mapped to generalized forces
through the analytic task Jacobian.  Wind uses a linear altitude profile and a
dynamic-pressure coefficient of 0.61 applied to two effective areas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

WIND_PRESSURE_COEF = 0.61


def _diag6(v, name):
    v = np.broadcast_to(np.asarray(v, dtype=float), (6,)).copy()
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise ValueError(f"{name} must be finite and non-negative")
    return v


@dataclass
class EnvImpedance:
    """Diagonal environment stiffness ``Sc`` and damping ``Dc`` (per task axis).

    ``chi0`` is the rest pose of the environment springs; zero anchors them at
    the task-space origin.
    """

    Sc: np.ndarray = field(default_factory=lambda: np.full(6, 0.1))
    Dc: np.ndarray = field(default_factory=lambda: np.full(6, 0.01))
    chi0: np.ndarray = field(default_factory=lambda: np.zeros(6))

    def __post_init__(self):
        self.Sc = _diag6(self.Sc, "Sc")
        self.Dc = _diag6(self.Dc, "Dc")
        self.chi0 = np.broadcast_to(np.asarray(self.chi0, dtype=float), (6,)).copy()

    @property
    def h(self) -> np.ndarray:
        """Stacked (Sc, Dc) diagonals, the environment parameters seen by the estimator."""
        return np.concatenate([self.Sc, self.Dc])


@dataclass
class WindParams:
    Vw_z0: float = 3.0  # m/s at reference altitude
    z0: float = 1.0
    psi_w: float = 0.0
    Ae1: float = 0.16
    Ae2: float = 0.032

    def __post_init__(self):
        if not self.z0 > 0:
            raise ValueError("z0 must be positive")
        if self.Ae1 < 0 or self.Ae2 < 0:
            raise ValueError("effective areas must be non-negative")

    def coefficients(self) -> np.ndarray:
        """``(f_wx1, f_wx2, f_wy1, f_wy2)``: force per z^2 for each projected area."""
        k = WIND_PRESSURE_COEF * (self.Vw_z0 / self.z0) ** 2
        c, s = math.cos(self.psi_w), math.sin(self.psi_w)
        return np.array([k * self.Ae1 * c, k * self.Ae2 * c, k * self.Ae1 * s, k * self.Ae2 * s])


def wind_speed(z: float, w: WindParams) -> float:
    return w.Vw_z0 * z / w.z0


def wind_force(z: float, theta: float, phi: float, w: WindParams):
    """Horizontal wind force components ``(F_wx, F_wy)`` [N]."""
    if z < 0:
        raise ValueError("altitude must be non-negative")
    f = w.coefficients()
    z2 = z * z
    fx = f[0] * z2 * math.sin(theta) + f[1] * z2 * math.cos(theta)
    fy = f[2] * z2 * math.sin(phi) + f[3] * z2 * math.cos(phi)
    return fx, fy


def wind_generalized(q, w: WindParams) -> np.ndarray:
    """``tau_w`` in R^8; only the x and y rows are non-zero."""
    tau = np.zeros(8)
    tau[0], tau[1] = wind_force(max(q[2], 0.0), q[4], q[5], w)
    return tau


def contact_force(chi_e, dchi_e, env: EnvImpedance) -> np.ndarray:
    """End-effector generalized contact force ``F_e`` (N, N m)."""
    chi_e = np.asarray(chi_e, dtype=float)
    dchi_e = np.asarray(dchi_e, dtype=float)
    return env.Sc * (chi_e - env.chi0) + env.Dc * dchi_e


def contact_generalized(F_e, J) -> np.ndarray:
    """``tau_l = J^T F_e`` with ``J`` the 6x8 analytic task Jacobian."""
    return np.asarray(J).T @ np.asarray(F_e, dtype=float)
