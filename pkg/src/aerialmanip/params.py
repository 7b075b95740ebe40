"""Physical parameters of the quadrotor-manipulator and their default values."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

GRAVITY = 9.81

# Actuator limits: rotor thrust and the two arm servos.
MAX_THRUST = 6.0
MAX_JOINT_TORQUE = (0.7, 0.4)


@dataclass(frozen=True)
class RobotParams:
    """Masses [kg], inertias [N m s^2], lengths [m] and rotor coefficients.

    The arm links are modelled as uniform thin rods hanging below the body
    centre: ``L0`` is the rigid mount, ``L1`` and ``L2`` the moving links.
    """

    m: float = 1.0
    m0: float = 30e-3
    m1: float = 55e-3
    m2: float = 112e-3
    Ix: float = 13.2e-3
    Iy: float = 12.5e-3
    Iz: float = 23.5e-3
    Ir: float = 33.2e-6
    L0: float = 30e-3
    L1: float = 70e-3
    L2: float = 85e-3
    d: float = 223e-3
    Kf: tuple = (1.6e-5, 1.2e-5, 1.7e-5, 1.5e-5)
    Km: tuple = (3.9e-7, 2.8e-7, 4.4e-7, 3.1e-7)

    def __post_init__(self):
        scalars = [getattr(self, f.name) for f in fields(self) if f.name not in ("Kf", "Km")]
        if not all(np.isfinite(v) and v > 0 for v in scalars):
            raise ValueError("all masses, inertias and lengths must be positive")
        if len(self.Kf) != 4 or len(self.Km) != 4:
            raise ValueError("Kf and Km need one entry per rotor")
        if min(self.Kf) <= 0 or min(self.Km) <= 0:
            raise ValueError("rotor coefficients must be positive")
        object.__setattr__(self, "Kf", tuple(float(v) for v in self.Kf))
        object.__setattr__(self, "Km", tuple(float(v) for v in self.Km))

    @property
    def total_mass(self) -> float:
        return self.m + self.m0 + self.m1 + self.m2

    @property
    def reach(self) -> float:
        return self.L0 + self.L1 + self.L2

    @property
    def gamma(self) -> np.ndarray:
        """Drag-to-thrust ratio of each rotor."""
        return np.asarray(self.Km) / np.asarray(self.Kf)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["Kf"] = list(self.Kf)
        out["Km"] = list(self.Km)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RobotParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown robot parameter(s): {sorted(unknown)}")
        return cls(**data)

    def scaled(self, **factors) -> "RobotParams":
        return replace(self, **{k: getattr(self, k) * v for k, v in factors.items()})


# Minimal (base) inertial parameter set.  Every term of the kinetic and
# potential energy is linear in these nine numbers, which is what the
# regressor relies on.
INERTIAL_NAMES = (
    "m_total",  # all mass, translating with the body origin
    "s_base",   # first moment of body-fixed mass along -z_b (rod 0 + masses lumped at joint 1)
    "Ix_base",
    "Iy_base",
    "Iz_base",
    "s_link1",  # first moment of link 1 (+ link-2 mass at joint 2) about joint 1
    "J_link1",  # transverse inertia of the same about joint 1
    "s_link2",
    "J_link2",
)


def inertial_parameters(p: RobotParams) -> np.ndarray:
    """Map physical parameters onto the base inertial parameter vector."""
    arm = p.m1 + p.m2
    return np.array([
        p.total_mass,
        p.m0 * p.L0 / 2 + arm * p.L0,
        p.Ix + p.m0 * p.L0**2 / 3 + arm * p.L0**2,
        p.Iy + p.m0 * p.L0**2 / 3 + arm * p.L0**2,
        p.Iz,
        p.m1 * p.L1 / 2 + p.m2 * p.L1,
        p.m1 * p.L1**2 / 3 + p.m2 * p.L1**2,
        p.m2 * p.L2 / 2,
        p.m2 * p.L2**2 / 3,
    ])


COORDINATES = ("x", "y", "z", "psi", "theta", "phi", "theta1", "theta2")


@dataclass
class GeneralizedState:
    """Generalized coordinates (x, y, z, psi, theta, phi, theta1, theta2) and rates."""

    q: np.ndarray
    qd: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(8)
        self.qd = np.asarray(self.qd, dtype=float).reshape(8)
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qd))):
            raise ValueError("state must be finite")

    @classmethod
    def zero(cls) -> "GeneralizedState":
        return cls(np.zeros(8), np.zeros(8))

    def copy(self) -> "GeneralizedState":
        return GeneralizedState(self.q.copy(), self.qd.copy())
