"""Closed-loop simulation: reference generation, measurement noise, the
parameter-uncertainty step and the full controller/plant loop.

The plant runs RK4 on the true parameters with ``physics_substeps`` steps per
control tick; the controller sees noisy measurements and the nominal model.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import _fast
from .dob import DEFAULT_GV, DObBank, LowPass
from .dynamics import actuation_matrix, control_matrices, diagonal_inertia_range, dynamics_terms
from .environment import EnvImpedance, WindParams
from .errors import DivergenceDetected, GimbalSingularity, UnstableImpedanceConfig, VerticalThrustTooSmall
from .ftrls import N_P, FtrlsState, build_regressor, ftrls_step, reconstruct_force
from .impedance import (
    ATTITUDE_CLAMP,
    AttitudeSetpoint,
    THRUST_GUARD,
    ImpedanceParams,
    TaskReference,
    allocate,
    error_dynamics_check,
    damping_velocity,
    attitude_pd,
    attitude_setpoint,
    horizontal_force,
    impedance_accel,
    task_to_joint,
)
from .kinematics import SIGMA_INDEX, ZETA_INDEX, forward_kinematics, jacobians
from .params import RobotParams, inertial_parameters

DIVERGENCE_LIMIT = 1e6


# ---------------------------------------------------------------------------
# reference

def quintic(t: float, T: float):
    """Normalized quintic blend ``s(t)`` on [0, T] with zero end rates; returns (s, s', s'')."""
    if t <= 0:
        return 0.0, 0.0, 0.0
    if t >= T:
        return 1.0, 0.0, 0.0
    x = t / T
    s = x**3 * (10 - 15 * x + 6 * x**2)
    ds = 30 * x**2 * (1 - x) ** 2 / T
    dds = 60 * x * (1 - x) * (1 - 2 * x) / T**2
    return s, ds, dds


@dataclass
class TrajectorySpec:
    helix_radius: float = 0.5
    helix_rate: float = 0.4     # rad/s
    climb_rate: float = 0.05    # m/s
    center: tuple = (0.0, 0.0, 1.0)
    # end-effector (psi, theta, phi) waypoints joined by quintic segments, then held
    orientation_waypoints: tuple = ((0.0, 0.0, 0.0), (0.2, 0.1, -0.1), (0.0, 0.0, 0.0))
    segment_duration: float = 10.0

    def __post_init__(self):
        self.center = tuple(float(v) for v in self.center)
        self.orientation_waypoints = tuple(tuple(float(a) for a in w) for w in self.orientation_waypoints)
        if len(self.center) != 3 or any(len(w) != 3 for w in self.orientation_waypoints):
            raise ValueError("center and orientation waypoints need three components")
        if not self.orientation_waypoints:
            raise ValueError("need at least one orientation waypoint")
        if self.helix_radius < 0 or not self.segment_duration > 0:
            raise ValueError("helix radius must be >= 0 and segment duration > 0")


def generate_reference(spec: TrajectorySpec, t: float) -> TaskReference:
    r, w, vz = spec.helix_radius, spec.helix_rate, spec.climb_rate
    c, s = math.cos(w * t), math.sin(w * t)
    chi = np.empty(6)
    dchi = np.empty(6)
    ddchi = np.empty(6)
    chi[:3] = np.asarray(spec.center) + (r * c, r * s, vz * t)
    dchi[:3] = (-r * w * s, r * w * c, vz)
    ddchi[:3] = (-r * w * w * c, -r * w * w * s, 0.0)

    wp = np.asarray(spec.orientation_waypoints)
    seg = int(t // spec.segment_duration) if t > 0 else 0
    if seg >= len(wp) - 1:
        chi[3:], dchi[3:], ddchi[3:] = wp[-1], 0.0, 0.0
    else:
        sv, dsv, ddsv = quintic(t - seg * spec.segment_duration, spec.segment_duration)
        delta = wp[seg + 1] - wp[seg]
        chi[3:] = wp[seg] + sv * delta
        dchi[3:] = dsv * delta
        ddchi[3:] = ddsv * delta
    return TaskReference(chi, dchi, ddchi)


def initial_state(spec: TrajectorySpec, params: RobotParams) -> np.ndarray:
    """At rest on the reference start point, level, arm straight down."""
    ref = generate_reference(spec, 0.0)
    q = np.zeros(8)
    q[:3] = ref.chi[:3] + (0.0, 0.0, params.reach)
    return q


# ---------------------------------------------------------------------------
# configuration

# smallest diagonal inertias of the nominal model over the operating envelope
# (attitude within 0.5 rad, joints within pi/2), so Mn/M_ii <= 1 everywhere
MN_ZETA_DEFAULT = (1.197, 1.197, 1.197, 0.0193, 6.4e-4, 2.7e-4)
# 0.6 x the smallest pitch/roll inertia: leaves room for a fast (80 rad/s) observer
MN_SIGMA_DEFAULT = (0.0076, 0.0084)


@dataclass
class ControllerGains:
    """Controller tuning.  ``g_zeta``/``g_sigma`` are DOb cutoffs (rad/s)."""

    # x, y slower: their observers see the attitude loop and the tilt-dependent wind
    g_zeta: tuple = (20.0, 20.0, 40.0, 40.0, 40.0, 40.0)
    g_sigma: tuple = (80.0, 80.0)
    gv: float = DEFAULT_GV
    Mn_zeta: tuple = MN_ZETA_DEFAULT
    Mn_sigma: tuple = MN_SIGMA_DEFAULT
    Kp_sigma: float = 400.0
    Kd_sigma: float = 40.0
    impedance: ImpedanceParams = field(default_factory=ImpedanceParams)
    eta_min: float = 0.8
    gamma_g: float = 5.0
    r0: float = 100.0
    rinv_floor: float = 1e-3  # estimator information floor (caps R at 1000 I); 0 keeps the plain update
    adaptive_forgetting: bool = True
    regressor_cutoff: float = 0.5  # common low-pass on Y and tau for the estimator (rad/s)
    thrust_guard: float = THRUST_GUARD
    attitude_clamp: float = ATTITUDE_CLAMP
    force_feedback: bool = True
    exact_position: bool = False  # cancel attitude terms in the position rows
    xy_commanded_force: bool = False  # x/y observers see the setpoint force, not the tilted thrust


@dataclass
class ScenarioConfig:
    duration: float = 30.0
    control_dt: float = 1e-3
    physics_substeps: int = 4
    noise_mean: float = 1e-3
    noise_std: float = 5e-3
    uncertainty_time: float = 15.0
    uncertainty_factor: float = 0.10
    actuator_sign: float = -1.0  # N scaled by 1 + sign*factor
    inertia_sign: float = 1.0    # M scaled by 1 + sign*factor
    rng_seed: int = 0
    warm_start: bool = True
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    env: EnvImpedance = field(default_factory=EnvImpedance)
    wind: WindParams = field(default_factory=WindParams)
    gains: ControllerGains = field(default_factory=ControllerGains)
    robot: RobotParams = field(default_factory=RobotParams)      # true plant
    nominal: RobotParams = field(default_factory=RobotParams)    # controller model

    def __post_init__(self):
        if not self.control_dt > 0 or not self.duration >= 0:
            raise ValueError("control_dt must be positive and duration non-negative")
        if int(self.physics_substeps) != self.physics_substeps or self.physics_substeps < 1:
            raise ValueError("physics_substeps must be a positive integer")
        if self.uncertainty_factor < 0 or self.noise_std < 0:
            raise ValueError("uncertainty factor and noise std must be non-negative")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.control_dt))


def validate_config(cfg: ScenarioConfig):
    """Observer robustness (against the nominal model's smallest ``M_ii``) and impedance stability.

    Returns ``(robustness_reports, error_dynamics_report)``; raises
    :class:`ConstraintViolation` or :class:`UnstableImpedanceConfig`.
    The attitude loop ``s^2 + Kd s + Kp`` must be Hurwitz as well.
    """
    g = cfg.gains
    if not (g.Kp_sigma > 0 and g.Kd_sigma > 0):
        raise UnstableImpedanceConfig(f"attitude loop not Hurwitz (Kp={g.Kp_sigma:g}, Kd={g.Kd_sigma:g})")
    bank = DObBank.build(g.g_zeta, g.g_sigma, g.Mn_zeta, g.Mn_sigma, g.gv, cfg.control_dt)
    lo, _ = diagonal_inertia_range(cfg.nominal)
    return bank.validate(lo), error_dynamics_check(g.impedance)


# ---------------------------------------------------------------------------
# measurement and uncertainty

def measure(q, qd, rng: np.random.Generator, cfg: ScenarioConfig):
    """Add i.i.d. Gaussian noise to every position and rate channel."""
    if cfg.noise_std == 0 and cfg.noise_mean == 0:
        return np.array(q, float), np.array(qd, float)
    n = rng.normal(cfg.noise_mean, cfg.noise_std, 16)
    return q + n[:8], qd + n[8:]


def apply_uncertainty(t: float, cfg: ScenarioConfig):
    """``(inertia_scale, actuator_scale)`` of the plant at time ``t``."""
    if t < cfg.uncertainty_time or cfg.uncertainty_factor == 0:
        return 1.0, 1.0
    f = cfg.uncertainty_factor
    return 1.0 + cfg.inertia_sign * f, 1.0 + cfg.actuator_sign * f


# ---------------------------------------------------------------------------
# log

LOG_FIELDS = {
    # name: (width, unit)
    "t": (1, "s"),
    "q": (8, "m|rad"),
    "qd": (8, "m/s|rad/s"),
    "chi_e": (6, "m|rad"),
    "dchi_e": (6, "m/s|rad/s"),
    "chi_r": (6, "m|rad"),
    "dchi_r": (6, "m/s|rad/s"),
    "qdd_des": (8, "m/s^2|rad/s^2"),
    "tau": (8, "N|N m"),
    "u": (6, "N|N m"),
    "tau_dis_hat": (8, "N|N m"),
    "h_hat": (N_P, "mixed"),
    "F_hat": (6, "N|N m"),
    "F_e": (6, "N|N m"),
    "eta": (1, "1"),
    "saturated": (1, "flag"),
    "dls": (1, "flag"),
    "held": (1, "flag"),
    "cov_resets": (1, "count"),
}


@dataclass
class SimLog:
    data: dict
    events: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @classmethod
    def allocate(cls, n: int) -> "SimLog":
        return cls({k: np.zeros((n, w)) for k, (w, _) in LOG_FIELDS.items()})

    def __len__(self):
        return len(self.data["t"])

    def __getattr__(self, name):
        data = self.__dict__.get("data")
        if data is not None and name in data:
            arr = data[name]
            return arr[:, 0] if arr.shape[1] == 1 else arr
        raise AttributeError(name)

    def truncated(self, n: int) -> "SimLog":
        return SimLog({k: v[:n].copy() for k, v in self.data.items()}, list(self.events), dict(self.meta))

    def equals(self, other: "SimLog") -> bool:
        return all(np.array_equal(self.data[k], other.data[k]) for k in LOG_FIELDS)


# ---------------------------------------------------------------------------
# controller

class Controller:
    """Measurement-to-actuator pipeline of one control tick."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        g = cfg.gains
        dt = cfg.control_dt
        self.dt = dt
        self.params = cfg.nominal
        self.dobs = DObBank.build(g.g_zeta, g.g_sigma, g.Mn_zeta, g.Mn_sigma, g.gv, dt)
        self.vel = LowPass(np.full(8, g.gv), dt, np.zeros(8))
        self.tau_lp = LowPass(np.full(8, g.gv), dt, np.zeros(8))
        self.reg_lp = LowPass(np.full((8, N_P), g.regressor_cutoff), dt, np.zeros((8, N_P)))
        self.reg_tau_lp = LowPass(np.full(8, g.regressor_cutoff), dt, np.zeros(8))
        h0 = np.zeros(N_P)
        h0[:9] = inertial_parameters(self.params)
        self.est = FtrlsState.initial(h0, g.r0, eta_min=g.eta_min, gamma_g=g.gamma_g,
                                      adaptive=g.adaptive_forgetting, rinv_floor=g.rinv_floor)
        self.N = actuation_matrix(self.params)
        self.qd_f_prev = None
        self.jac_prev = None
        self.sigma_dd_prev = np.zeros(2)
        self.sigma_r_prev = np.zeros(2)
        self.u = np.zeros(6)
        self.tau_applied = np.zeros(8)
        self.F_hat = np.zeros(6)

    def warm_start(self, q):
        """Start every filter at hover: gravity already compensated, rates zero."""
        G = dynamics_terms(q, np.zeros(8), self.params).G
        _, _, B, B6 = control_matrices(q, self.params)
        self.u = np.linalg.solve(B6, G[2:8])
        self.tau_applied = B @ self.u
        self.dobs.zeta.reset(self.tau_applied[ZETA_INDEX])
        self.dobs.sigma.reset(self.tau_applied[SIGMA_INDEX])
        self.tau_lp.reset(0.0)
        self.tau_lp.y[...] = self.tau_applied
        self.tau_lp.x[...] = self.tau_applied

    def step(self, t, q_m, qd_m, ref: TaskReference):
        cfg = self.cfg
        g = cfg.gains
        dt = self.dt
        out = {}

        qd_f = self.vel.step(qd_m)
        qdd_f = np.zeros(8) if self.qd_f_prev is None else (qd_f - self.qd_f_prev) / dt
        self.qd_f_prev = qd_f
        jac = jacobians(q_m, self.params)
        JA = jac.analytic
        chi = forward_kinematics(q_m, self.params).chi
        dchi = JA @ qd_f

        # estimator: applied torque and regressor share the same filters
        tau_f = self.tau_lp.step(self.tau_applied)
        reg = build_regressor(q_m, qd_f, qdd_f, chi - cfg.env.chi0, dchi, JA, self.params)
        Yf = self.reg_lp.step(reg.Y)
        tf = self.reg_tau_lp.step(tau_f)
        _, err = ftrls_step(self.est, Yf, tf, dt)
        F_hat = reconstruct_force(self.est, reg.Y_e).F_e
        self.F_hat = F_hat

        # outer loop
        F_fb = F_hat if g.force_feedback else np.zeros(6)
        dchi_fb = dchi if g.exact_position else damping_velocity(dchi, jac, qd_f[ZETA_INDEX])
        ddchi_des = impedance_accel(ref, chi, dchi_fb, F_fb, g.impedance)
        zeta_dd, used_dls = task_to_joint(ddchi_des, ref.dchi, qd_f[ZETA_INDEX], qd_f[SIGMA_INDEX],
                                          self.sigma_dd_prev, jac, self.jac_prev, dt,
                                          exact_position=g.exact_position)
        self.jac_prev = jac
        tau_zeta, dis_zeta = self.dobs.zeta.step(zeta_dd, qd_m[ZETA_INDEX],
                                                 self.tau_applied[ZETA_INDEX])
        held = False
        try:
            sp = attitude_setpoint(tau_zeta, q_m[3], g.thrust_guard, g.attitude_clamp)
        except VerticalThrustTooSmall:
            sp = AttitudeSetpoint(*self.sigma_r_prev, held=True)
            held = True
        sigma_r = sp.sigma
        self.sigma_r_prev = sigma_r
        sigma_dd = attitude_pd(sigma_r, q_m[SIGMA_INDEX], qd_f[SIGMA_INDEX], g.Kp_sigma, g.Kd_sigma)
        self.sigma_dd_prev = sigma_dd
        tau_sigma, dis_sigma = self.dobs.sigma.step(sigma_dd, qd_m[SIGMA_INDEX],
                                                    self.tau_applied[SIGMA_INDEX])

        N, H, B, B6 = control_matrices(q_m, self.params)
        alloc = allocate(tau_zeta, tau_sigma, B6)
        self.u = alloc.actuator.u
        tau_post = B @ self.u
        if g.xy_commanded_force:
            # force encoded by the (clamped) attitude setpoint rather than the present tilt
            tau_post[:2] = horizontal_force(sp, tau_post[2], q_m[3])
        self.tau_applied = tau_post

        tau_cmd = np.zeros(8)
        tau_cmd[ZETA_INDEX] = tau_zeta
        tau_cmd[SIGMA_INDEX] = tau_sigma
        dis = np.zeros(8)
        dis[ZETA_INDEX] = dis_zeta
        dis[SIGMA_INDEX] = dis_sigma
        qdd_des = np.zeros(8)
        qdd_des[ZETA_INDEX] = zeta_dd
        qdd_des[SIGMA_INDEX] = sigma_dd
        out.update(u=self.u, tau=tau_cmd, tau_dis_hat=dis, qdd_des=qdd_des, F_hat=F_hat,
                   h_hat=self.est.h, eta=self.est.eta, saturated=alloc.actuator.saturated,
                   dls=used_dls, held=held, cov_resets=self.est.resets)
        return out


# ---------------------------------------------------------------------------
# plant + loop

class Plant:
    def __init__(self, cfg: ScenarioConfig, q0):
        self.cfg = cfg
        p = cfg.robot
        self.pi = inertial_parameters(p)
        self.L = np.array([p.L0, p.L1, p.L2])
        self.N0 = actuation_matrix(p)
        self.x = np.concatenate([np.asarray(q0, float), np.zeros(8)])
        self.wind = cfg.wind.coefficients()

    def contact(self):
        chi, JA = _fast.ee_pose_and_jacobian(self.x[:8], self.L)
        dchi = JA @ self.x[8:]
        env = self.cfg.env
        return chi, dchi, env.Sc * (chi - env.chi0) + env.Dc * dchi

    def advance(self, u, t):
        cfg = self.cfg
        m_scale, a_scale = apply_uncertainty(t, cfg)
        n = int(cfg.physics_substeps)
        self.x = _fast.rk4(self.x, np.asarray(u, float), cfg.control_dt / n, n, self.pi, self.L,
                           a_scale * self.N0, m_scale, cfg.env.Sc, cfg.env.Dc, cfg.env.chi0,
                           self.wind, 1e-6)
        return self.x


def _diverged(x) -> bool:
    return not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_LIMIT


def run_scenario(cfg: ScenarioConfig, progress=None) -> SimLog:
    """Run the closed loop for ``cfg.duration`` seconds and return the log.

    Raises :class:`DivergenceDetected` (with the partial log attached) when the
    state blows up or leaves the attitude chart.
    """
    validate_config(cfg)
    t0 = time.perf_counter()
    n = cfg.n_ticks
    log = SimLog.allocate(n)
    _describe(log, cfg)
    rng = np.random.default_rng(cfg.rng_seed)
    q0 = initial_state(cfg.trajectory, cfg.robot)
    plant = Plant(cfg, q0)
    ctrl = Controller(cfg)
    if cfg.warm_start:
        ctrl.warm_start(q0)
    prev_flags = {"saturated": False, "dls": False, "held": False}
    prev_resets = 0
    d = log.data
    for k in range(n):
        t = k * cfg.control_dt
        q, qd = plant.x[:8].copy(), plant.x[8:].copy()
        chi, dchi, F_e = plant.contact()
        ref = generate_reference(cfg.trajectory, t)
        q_m, qd_m = measure(q, qd, rng, cfg)
        try:
            out = ctrl.step(t, q_m, qd_m, ref)
        except GimbalSingularity as exc:
            log.events.append((t, "divergence", str(exc)))
            raise DivergenceDetected(f"attitude left the Euler chart at t={t:.3f} s", log.truncated(k)) from exc

        d["t"][k, 0] = t
        d["q"][k] = q
        d["qd"][k] = qd
        d["chi_e"][k] = chi
        d["dchi_e"][k] = dchi
        d["chi_r"][k] = ref.chi
        d["dchi_r"][k] = ref.dchi
        d["F_e"][k] = F_e
        for key in ("qdd_des", "tau", "u", "tau_dis_hat", "h_hat", "F_hat"):
            d[key][k] = out[key]
        d["eta"][k, 0] = out["eta"]
        for key in ("saturated", "dls", "held"):
            d[key][k, 0] = float(out[key])
            if out[key] and not prev_flags[key]:
                log.events.append((t, key, ""))
            prev_flags[key] = out[key]
        d["cov_resets"][k, 0] = out["cov_resets"]
        if out["cov_resets"] != prev_resets:
            log.events.append((t, "covariance_reset", ""))
            prev_resets = out["cov_resets"]
        if t >= cfg.uncertainty_time and cfg.uncertainty_factor and (t - cfg.control_dt) < cfg.uncertainty_time:
            log.events.append((t, "uncertainty_step", f"factor={cfg.uncertainty_factor}"))

        x = plant.advance(out["u"], t)
        if _diverged(x):
            log.events.append((t, "divergence", "state norm above limit"))
            raise DivergenceDetected(f"state diverged at t={t:.3f} s", log.truncated(k + 1))
        if progress is not None:
            progress(k, n)
    log.meta["wall_clock_s"] = time.perf_counter() - t0
    return log


def _describe(log: SimLog, cfg: ScenarioConfig):
    log.meta.update(control_dt=cfg.control_dt, uncertainty_time=cfg.uncertainty_time,
                    rng_seed=cfg.rng_seed, duration=cfg.duration)
