"""Disturbance-observer (DOb) inner loop.

Each coordinate is treated as a nominal double integrator ``Mn qdd = tau - d``.
The observer needs no acceleration measurement:

    qd_f    = LP_gv(qd)
    tau_dis = LP_g(tau_prev + g Mn qd_f) - g Mn qd_f
    tau     = Mn qdd_des + tau_dis

Both low-pass filters ``w/(s+w)`` are discretized with the bilinear rule.
A channel is linear in its inputs, so the classes below work elementwise on
arrays: one object can hold any number of independent channels.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintViolation

DEFAULT_GV = 100.0

# nominal inertias of the zeta = (x, y, z, psi, theta1, theta2) and sigma = (theta, phi) channels
MN_ZETA = (0.02, 0.02, 2.0, 0.05, 0.01, 0.01)
MN_SIGMA = (0.05, 0.05)
ZETA_NAMES = ("x", "y", "z", "psi", "theta1", "theta2")
SIGMA_NAMES = ("theta", "phi")


def tustin_lowpass(cutoff, dt):
    """Coefficients ``(a, b)`` of ``y_k = a y_{k-1} + b (x_k + x_{k-1})``."""
    cutoff = np.asarray(cutoff, dtype=float)
    wd = cutoff * dt
    if np.any(wd <= 0) or np.any(wd >= 2):
        raise ValueError("need 0 < cutoff*dt < 2 for a well-behaved bilinear filter")
    return (2 - wd) / (2 + wd), wd / (2 + wd)


class LowPass:
    """First-order low-pass ``w/(s+w)`` (vectorized over channels)."""

    def __init__(self, cutoff, dt, initial=0.0):
        self.a, self.b = tustin_lowpass(cutoff, dt)
        shape = np.broadcast_shapes(np.shape(self.a), np.shape(initial))
        self.y = np.broadcast_to(np.asarray(initial, float), shape).copy()
        self.x = self.y.copy()

    def reset(self, value=0.0):
        self.y[...] = value
        self.x[...] = value

    def step(self, x):
        x = np.asarray(x, dtype=float)
        self.y = self.a * self.y + self.b * (x + self.x)
        self.x = np.array(x, dtype=float)
        return self.y.copy()


class DObChannel:
    """A set of independent DOb channels with nominal inertias ``Mn``.

    ``g`` is the observer cutoff and ``gv`` the velocity-filter cutoff
    (rad/s).  All three may be scalars or equal-length arrays.
    """

    def __init__(self, Mn, g, gv=DEFAULT_GV, dt=1e-3, names=None):
        self.Mn = np.atleast_1d(np.asarray(Mn, dtype=float))
        n = self.Mn.size
        self.g = np.broadcast_to(np.asarray(g, float), (n,)).copy()
        self.gv = np.broadcast_to(np.asarray(gv, float), (n,)).copy()
        if np.any(self.Mn <= 0) or np.any(self.g <= 0) or np.any(self.gv <= 0):
            raise ValueError("Mn, g and gv must be positive")
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.dt = dt
        self.names = tuple(names) if names is not None else tuple(str(i) for i in range(n))
        self.lp = LowPass(self.g, dt, np.zeros(n))
        self.vel = LowPass(self.gv, dt, np.zeros(n))
        self.tau_hat = np.zeros(n)

    @property
    def size(self) -> int:
        return self.Mn.size

    def reset(self, tau_dis=0.0, qd=0.0):
        """Put the filters in the steady state for a constant ``qd`` and disturbance.

        With ``tau_prev == tau_dis`` held constant the estimate then stays at
        ``tau_dis``.  Zero arguments give the cold start.
        """
        qd = np.broadcast_to(np.asarray(qd, float), (self.size,))
        tau_dis = np.broadcast_to(np.asarray(tau_dis, float), (self.size,))
        self.vel.reset(qd)
        self.lp.reset(tau_dis + self.g * self.Mn * qd)
        self.lp.x[...] = self.lp.y
        self.tau_hat = tau_dis.copy()

    def step(self, qdd_des, qd_meas, tau_prev):
        """Advance one sample; returns ``(tau_cmd, tau_dis_hat)``."""
        qd_f = self.vel.step(qd_meas)
        shift = self.g * self.Mn * qd_f
        self.tau_hat = self.lp.step(np.asarray(tau_prev, float) + shift) - shift
        tau = self.Mn * np.asarray(qdd_des, float) + self.tau_hat
        return tau, self.tau_hat.copy()


@dataclass
class RobustnessReport:
    name: str
    alpha: float       # Mn / M_ii
    alpha_g: float     # effective bandwidth (= Kv / M_ii)
    limit: float       # gv / 2
    damping: float     # 0.5 sqrt(gv / (alpha g))
    ok: bool


def damping_ratio(alpha, g, gv):
    return 0.5 * np.sqrt(gv / (alpha * g))


def characteristic_roots(alpha, g, gv) -> np.ndarray:
    """Roots of ``s^2 + gv s + alpha g gv``."""
    return np.roots([1.0, gv, alpha * g * gv])


def sampled_loop_poles(Mn, M, g, gv=DEFAULT_GV, dt=1e-3) -> np.ndarray:
    """Poles (1/s) of one sampled DOb channel closed around ``M qdd = tau`` with ``qdd_des = 0``.

    Built from the observer's own update rule, so it includes the bilinear
    filters and the one-sample delay of ``tau_prev``.  The equivalent
    continuous poles are ``log(z)/dt``, sorted by magnitude; the two slowest
    non-zero ones approach :func:`characteristic_roots` as ``dt -> 0``.
    """
    def advance(s):
        ch = DObChannel(Mn, g, gv, dt)
        v, vy, vx, ly, lx, tp = s
        ch.vel.y[:], ch.vel.x[:], ch.lp.y[:], ch.lp.x[:] = vy, vx, ly, lx
        tau, _ = ch.step([0.0], [v], [tp])
        return np.array([v + dt * tau[0] / M, ch.vel.y[0], ch.vel.x[0], ch.lp.y[0], ch.lp.x[0], tau[0]])

    A = np.column_stack([advance(e) for e in np.eye(6)])
    z = np.linalg.eigvals(A).astype(complex)
    z = z[np.abs(z) > 1e-12]
    s = np.log(z) / dt
    return s[np.argsort(np.abs(s))]


def robustness_reports(channel: DObChannel, M_ii_bound) -> list[RobustnessReport]:
    M_ii = np.broadcast_to(np.asarray(M_ii_bound, float), (channel.size,))
    out = []
    for i in range(channel.size):
        alpha = channel.Mn[i] / M_ii[i]
        ag = alpha * channel.g[i]
        limit = channel.gv[i] / 2
        out.append(RobustnessReport(channel.names[i], float(alpha), float(ag), float(limit),
                                    float(damping_ratio(alpha, channel.g[i], channel.gv[i])),
                                    bool(ag <= limit * (1 + 1e-12))))
    return out


def validate_robustness(channel: DObChannel, M_ii_bound) -> list[RobustnessReport]:
    """Check ``Kv_i / M_ii <= gv_i / 2`` with ``Kv = g Mn`` for every channel.

    ``M_ii_bound`` is the smallest diagonal inertia the channel can see (the
    worst case for the bound).  Raises :class:`ConstraintViolation` listing the
    offending channels.
    """
    reports = robustness_reports(channel, M_ii_bound)
    bad = [r for r in reports if not r.ok]
    if bad:
        desc = ", ".join(f"{r.name}: alpha*g={r.alpha_g:.4g} > gv/2={r.limit:.4g}" for r in bad)
        raise ConstraintViolation(f"DOb robustness bound violated ({desc})", reports)
    return reports


def max_robust_gain(Mn, M_ii_min, gv=DEFAULT_GV, fraction=1.0):
    """Largest observer cutoff meeting the robustness bound (scaled by ``fraction``)."""
    alpha = np.asarray(Mn, float) / np.asarray(M_ii_min, float)
    return fraction * np.asarray(gv, float) / (2 * alpha)


@dataclass
class DObBank:
    """The two observer groups of the controller: zeta (6 channels) and sigma (2)."""

    zeta: DObChannel
    sigma: DObChannel
    stats: dict = field(default_factory=dict)

    @classmethod
    def build(cls, g_zeta, g_sigma, Mn_zeta=MN_ZETA, Mn_sigma=MN_SIGMA, gv=DEFAULT_GV, dt=1e-3):
        return cls(DObChannel(Mn_zeta, g_zeta, gv, dt, ZETA_NAMES),
                   DObChannel(Mn_sigma, g_sigma, gv, dt, SIGMA_NAMES))

    def validate(self, M_diag_min) -> list[RobustnessReport]:
        """``M_diag_min`` holds the 8 worst-case diagonal inertias in q order."""
        M_diag_min = np.asarray(M_diag_min, float)
        reports = robustness_reports(self.zeta, M_diag_min[[0, 1, 2, 3, 6, 7]])
        reports += robustness_reports(self.sigma, M_diag_min[[4, 5]])
        bad = [r for r in reports if not r.ok]
        if bad:
            desc = ", ".join(f"{r.name}: alpha*g={r.alpha_g:.4g} > gv/2={r.limit:.4g}" for r in bad)
            raise ConstraintViolation(f"DOb robustness bound violated ({desc})", reports)
        return reports


def decoupled_reference_check(t, qdd, qdd_des, cutoff) -> np.ndarray:
    """Per-coordinate peak of ``|LP(qdd) - LP(qdd_des)|`` after low-pass filtering at ``cutoff``.

    ``qdd`` and ``qdd_des`` are (n_samples, n_coords) arrays sampled at times ``t``.
    Quantifies how closely the loop behaves as the decoupled double
    integrators ``qdd_i = qdd_des_i``.
    """
    qdd = np.asarray(qdd, float)
    qdd_des = np.asarray(qdd_des, float)
    if len(t) < 2:
        return np.zeros(qdd.shape[1:])
    dt = float(t[1] - t[0])
    lp_a = LowPass(cutoff, dt, qdd[0])
    lp_b = LowPass(cutoff, dt, qdd_des[0])
    peak = np.zeros(qdd.shape[1:])
    for a, b in zip(qdd, qdd_des):
        peak = np.maximum(peak, np.abs(lp_a.step(a) - lp_b.step(b)))
    return peak
