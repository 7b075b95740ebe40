"""Fast-tracking recursive least squares (FTRLS) for contact-force estimation.

The full model ``tau = M qdd + C qd + G + tau_l + tau_w`` is linear in a
parameter vector ``h = (h_i, h_l, h_w)``:

* ``h_i`` (9): base inertial parameters, see :data:`aerialmanip.params.INERTIAL_NAMES`;
* ``h_l`` (12): environment stiffness and damping diagonals ``(Sc, Dc)``;
* ``h_w`` (4): wind coefficients ``(f_wx1, f_wx2, f_wy1, f_wy2)``.

The estimator integrates the continuous-time laws with forward Euler:

    e       = tau - Y h
    h      += dt R Y^T e
    R^-1   += dt (-eta R^-1 + Y^T Y)
    eta     = eta_min + (1 - eta_min) 2^(-round(gamma |e|^2))
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .errors import CovarianceBreakdown
from .params import INERTIAL_NAMES, RobotParams

N_I = len(INERTIAL_NAMES)
N_L = 12
N_W = 4
N_P = N_I + N_L + N_W

SLICE_I = slice(0, N_I)
SLICE_L = slice(N_I, N_I + N_L)
SLICE_W = slice(N_I + N_L, N_P)

PARAM_NAMES = (
    tuple(INERTIAL_NAMES)
    + tuple(f"Sc_{a}" for a in ("x", "y", "z", "psi", "theta", "phi"))
    + tuple(f"Dc_{a}" for a in ("x", "y", "z", "psi", "theta", "phi"))
    + ("f_wx1", "f_wx2", "f_wy1", "f_wy2")
)

COND_LIMIT = 1e10


@dataclass
class Regressor:
    Y: np.ndarray    # 8 x N_P
    Y_e: np.ndarray  # 6 x 12, F_e = Y_e h_l

    @property
    def Y_i(self):
        return self.Y[:, SLICE_I]

    @property
    def Y_l(self):
        return self.Y[:, SLICE_L]

    @property
    def Y_w(self):
        return self.Y[:, SLICE_W]


def environment_regressor(chi_e, dchi_e) -> np.ndarray:
    """``Y_e = [diag(chi_e) | diag(dchi_e)]`` so that ``Y_e (Sc, Dc) = F_e``."""
    return np.hstack([np.diag(np.asarray(chi_e, float)), np.diag(np.asarray(dchi_e, float))])


def wind_regressor(z, theta, phi) -> np.ndarray:
    Yw = np.zeros((8, N_W))
    z2 = z * z
    Yw[0, :2] = z2 * np.sin(theta), z2 * np.cos(theta)
    Yw[1, 2:] = z2 * np.sin(phi), z2 * np.cos(phi)
    return Yw


def build_regressor(q, qd, qdd, chi_e, dchi_e, J, params: RobotParams) -> Regressor:
    """Stack ``[Y_i | J^T Y_e | Y_w]``.

    ``chi_e`` should already be measured relative to the environment rest pose.
    """
    q = np.asarray(q, float)
    Y_e = environment_regressor(chi_e, dchi_e)
    Y = np.empty((8, N_P))
    Y[:, SLICE_I] = dynamics.inertial_regressor(q, qd, qdd, params)
    Y[:, SLICE_L] = np.asarray(J).T @ Y_e
    Y[:, SLICE_W] = wind_regressor(q[2], q[4], q[5])
    return Regressor(Y, Y_e)


def forgetting_factor(err_sq, eta_min, gamma_g) -> float:
    """Adaptive forgetting factor; equals 1 at zero error and decays toward ``eta_min``."""
    # np.rint rounds halves to even, which is what the round-off operator does in practice
    k = np.rint(gamma_g * err_sq)
    return float(eta_min + (1.0 - eta_min) * np.exp2(-min(k, 1074.0)))


@dataclass
class FtrlsState:
    h: np.ndarray
    Rinv: np.ndarray
    eta_min: float = 0.8
    gamma_g: float = 5.0
    r0: float = 100.0
    adaptive: bool = True
    fixed_eta: float = 1.0  # forgetting rate used when adaptive is off
    rinv_floor: float = 0.0  # lower bound on the eigenvalues of R^-1 (caps R); 0 disables
    eta: float = 1.0
    resets: int = 0
    _R: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not 0 < self.eta_min < 1:
            raise ValueError("eta_min must lie in (0, 1)")
        if not 0 < self.fixed_eta <= 1:
            raise ValueError("fixed_eta must lie in (0, 1]")
        if not 0 <= self.rinv_floor < np.inf:
            raise ValueError("rinv_floor must be finite and >= 0")
        if self.gamma_g < 0 or self.r0 <= 0:
            raise ValueError("gamma_g must be >= 0 and r0 > 0")
        self.h = np.array(self.h, dtype=float)
        self.Rinv = np.array(self.Rinv, dtype=float)
        if self._R is None:
            self._R = np.linalg.inv(self.Rinv)

    @classmethod
    def initial(cls, h0, r0: float = 100.0, **kw) -> "FtrlsState":
        h0 = np.asarray(h0, float)
        return cls(h0, np.eye(h0.size) / r0, r0=r0, _R=np.eye(h0.size) * r0, **kw)

    @property
    def R(self) -> np.ndarray:
        return self._R

    @property
    def h_i(self):
        return self.h[SLICE_I]

    @property
    def h_l(self):
        return self.h[SLICE_L]

    @property
    def h_w(self):
        return self.h[SLICE_W]

    def reset_covariance(self):
        n = self.h.size
        self.Rinv = np.eye(n) / self.r0
        self._R = np.eye(n) * self.r0
        self.resets += 1

    def copy(self) -> "FtrlsState":
        return FtrlsState(self.h.copy(), self.Rinv.copy(), self.eta_min, self.gamma_g,
                          self.r0, self.adaptive, self.fixed_eta, self.rinv_floor, self.eta, self.resets, self._R.copy())


def _invert_spd(A, floor=0.0):
    """``(A', A'^-1)`` with ``A'`` the information matrix after the eigenvalue floor."""
    w, V = np.linalg.eigh(A)
    if not w[0] > 0:
        raise CovarianceBreakdown("information matrix is no longer positive definite")
    if w[0] < floor:
        w = np.maximum(w, floor)
        A = (V * w) @ V.T
    if w[-1] / w[0] > COND_LIMIT:
        raise CovarianceBreakdown("covariance condition number above limit")
    return A, (V / w) @ V.T


def ftrls_step(state: FtrlsState, Y, tau, dt: float):
    """Advance the estimator in place; returns ``(state, tau_err)``.

    A covariance that loses definiteness or conditioning is reset to
    ``r0 I`` (counted in ``state.resets``) instead of raising.  With
    ``rinv_floor > 0`` the information matrix is kept above that level, so
    directions without excitation stop winding up the gain.
    """
    Y = np.asarray(Y, float)
    err = np.asarray(tau, float) - Y @ state.h
    if state.adaptive:
        state.eta = forgetting_factor(float(err @ err), state.eta_min, state.gamma_g)
    else:
        state.eta = state.fixed_eta
    state.h = state.h + dt * (state.R @ (Y.T @ err))
    Rinv = state.Rinv + dt * (Y.T @ Y - state.eta * state.Rinv)
    Rinv = 0.5 * (Rinv + Rinv.T)
    try:
        state.Rinv, state._R = _invert_spd(Rinv, state.rinv_floor)
    except CovarianceBreakdown:
        state.reset_covariance()
    return state, err


@dataclass
class ForceEstimate:
    F_e: np.ndarray
    tau_l: np.ndarray


def reconstruct_force(state: FtrlsState, Y_e, J=None) -> ForceEstimate:
    """``F_e_hat = Y_e h_l`` and, given the task Jacobian, ``tau_l_hat = J^T F_e_hat``."""
    F = np.asarray(Y_e, float) @ state.h_l
    tau_l = np.asarray(J).T @ F if J is not None else np.full(8, np.nan)
    return ForceEstimate(F, tau_l)
