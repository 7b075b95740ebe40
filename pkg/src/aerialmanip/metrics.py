"""Run metrics computed from a :class:`~aerialmanip.sim.SimLog`.

Windows (seconds, with ``t_u`` the uncertainty-step time):

* force transient: ``[0, 3)``; settle time is the last instant before
  ``t_u`` at which the error exceeds twice the pre-step steady level, the
  steady level being the peak error over ``[t_u - 5, t_u)``;
* steady force error: final 25 % of the run, and everything after 10 s;
* tracking: ``[t_u - 5, t_u)`` before and ``[t_u, t_u + 5)`` after the step;
  recovery is the first time after ``t_u`` from which the 1 s rolling RMS
  stays at or below the pre-step RMS for the rest of that 5 s window.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dynamics import mass_matrix
from .params import RobotParams
from .sim import SimLog

AXES = ("x", "y", "z", "psi", "theta", "phi")


@dataclass
class RunSummary:
    duration_s: float
    samples: int
    force_peak_first_3s: list
    force_settle_time_s: list
    force_steady_peak: list        # final 25 % of the run
    force_peak_after_10s: list
    track_rms_pre: list
    track_rms_post: list
    track_peak_pre: list
    track_peak_post: list
    recovery_time_s: list          # after the uncertainty step; nan if never
    mass_eig_range: list           # [min, max] eigenvalue of M(q) along the run
    events: dict
    wall_clock_s: float

    def to_dict(self) -> dict:
        return asdict(self)

    def lines(self) -> list[str]:
        def fmt(v):
            return " ".join(f"{a}={x:.4g}" for a, x in zip(AXES, v))
        out = [f"duration {self.duration_s:.3f} s, {self.samples} samples, wall clock {self.wall_clock_s:.1f} s"]
        for key in ("force_peak_first_3s", "force_settle_time_s", "force_steady_peak", "force_peak_after_10s",
                    "track_rms_pre", "track_rms_post", "track_peak_pre", "track_peak_post", "recovery_time_s"):
            out.append(f"{key:22s} {fmt(getattr(self, key))}")
        out.append(f"{'mass_eig_range':22s} {self.mass_eig_range[0]:.4g} .. {self.mass_eig_range[1]:.4g}")
        out.append("events " + ", ".join(f"{k}={v}" for k, v in sorted(self.events.items())))
        return out


def _peak(e, mask):
    return np.abs(e[mask]).max(axis=0) if mask.any() else np.full(e.shape[1], np.nan)


def _rms(e, mask):
    return np.sqrt((e[mask] ** 2).mean(axis=0)) if mask.any() else np.full(e.shape[1], np.nan)


def rolling_rms(e, n: int) -> np.ndarray:
    """Windowed RMS; row ``k`` covers samples ``k .. k+n-1``."""
    sq = np.vstack([np.zeros((1, e.shape[1])), np.cumsum(e**2, axis=0)])
    m = len(e) - n + 1
    if m <= 0:
        return np.zeros((0, e.shape[1]))
    return np.sqrt((sq[n:n + m] - sq[:m]) / n)


def settle_time(t, err, t_end, window=5.0, factor=2.0) -> np.ndarray:
    """Last time before ``t_end`` with ``|err|`` above ``factor`` x the peak over the final ``window`` s."""
    pre = (t >= t_end - window) & (t < t_end)
    level = _peak(err, pre) * factor
    out = np.zeros(err.shape[1])
    span = t < t_end
    for j in range(err.shape[1]):
        if not np.isfinite(level[j]):
            out[j] = np.nan
            continue
        above = np.nonzero(span & (np.abs(err[:, j]) > level[j]))[0]
        out[j] = t[above[-1]] + (t[1] - t[0] if len(t) > 1 else 0.0) if len(above) else 0.0
    return out


def recovery_time(t, err, t_step, pre_rms, window=1.0, horizon=5.0) -> np.ndarray:
    """Seconds after ``t_step`` until the rolling RMS settles at or below ``pre_rms``; nan if never.

    Only rolling windows that fit inside ``[t_step, t_step + horizon)`` count.
    """
    dt = t[1] - t[0] if len(t) > 1 else 1.0
    n = max(1, int(round(window / dt)))
    start = int(np.searchsorted(t, t_step))
    stop = int(np.searchsorted(t, t_step + horizon))
    rr = rolling_rms(err[:stop], n)
    out = np.full(err.shape[1], np.nan)
    for j in range(err.shape[1]):
        seg = rr[start:, j]
        if not len(seg):
            continue
        bad = np.nonzero(seg > pre_rms[j])[0]
        if not len(bad):
            out[j] = 0.0
        elif bad[-1] + 1 < len(seg):
            out[j] = (bad[-1] + 1) * dt
    return out


def mass_eig_range(q, params: RobotParams, every: int = 100) -> list:
    """Smallest and largest eigenvalue of the nominal ``M(q)`` over every ``every``-th sample."""
    if not len(q):
        return [float("nan"), float("nan")]
    eig = np.array([np.linalg.eigvalsh(mass_matrix(x, params))[[0, -1]] for x in q[::every]])
    return [float(eig[:, 0].min()), float(eig[:, 1].max())]


def summarize(log: SimLog, step_time: float | None = None, params: RobotParams | None = None) -> RunSummary:
    t = log.t
    ts = float(log.meta.get("uncertainty_time", 15.0) if step_time is None else step_time)
    ef = log.F_hat - log.F_e
    et = log.chi_r - log.chi_e
    T = float(t[-1]) if len(t) else 0.0
    pre = (t >= ts - 5) & (t < ts)
    post = (t >= ts) & (t < ts + 5)
    rms_pre = _rms(et, pre)
    n = len(t)
    tail = np.arange(n) >= int(np.floor(0.75 * n))
    events = {}
    for _, kind, *_ in log.events:
        events[kind] = events.get(kind, 0) + 1
    return RunSummary(
        duration_s=T + (t[1] - t[0] if n > 1 else 0.0),
        samples=n,
        force_peak_first_3s=_peak(ef, t < 3.0).tolist(),
        force_settle_time_s=settle_time(t, ef, ts).tolist(),
        force_steady_peak=_peak(ef, tail).tolist(),
        force_peak_after_10s=_peak(ef, t >= 10.0).tolist(),
        track_rms_pre=rms_pre.tolist(),
        track_rms_post=_rms(et, post).tolist(),
        track_peak_pre=_peak(et, pre).tolist(),
        track_peak_post=_peak(et, post).tolist(),
        recovery_time_s=recovery_time(t, et, ts, rms_pre).tolist(),
        mass_eig_range=mass_eig_range(log.q, params or RobotParams()),
        events=events,
        wall_clock_s=float(log.meta.get("wall_clock_s", float("nan"))),
    )
