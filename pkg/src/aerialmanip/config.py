"""Scenario configuration files.

YAML with one section per component.  Keys carry their unit as a suffix
(``helix_radius_m``, ``control_dt_s``) so that a bare number is never
ambiguous.  Keys that are left out fall back to the defaults, unknown keys
are rejected.
"""
from __future__ import annotations

import math

import numpy as np
import yaml

from .environment import EnvImpedance, WindParams
from .errors import ConfigError
from .impedance import ImpedanceParams
from .params import RobotParams
from .sim import ControllerGains, ScenarioConfig, TrajectorySpec

# section -> {file key: attribute}
SCENARIO_KEYS = {
    "duration_s": "duration",
    "control_dt_s": "control_dt",
    "physics_substeps": "physics_substeps",
    "noise_mean": "noise_mean",
    "noise_std": "noise_std",
    "uncertainty_time_s": "uncertainty_time",
    "uncertainty_factor": "uncertainty_factor",
    "actuator_sign": "actuator_sign",
    "inertia_sign": "inertia_sign",
    "rng_seed": "rng_seed",
    "warm_start": "warm_start",
}
TRAJECTORY_KEYS = {
    "helix_radius_m": "helix_radius",
    "helix_rate_rad_s": "helix_rate",
    "climb_rate_m_s": "climb_rate",
    "center_m": "center",
    "orientation_waypoints_rad": "orientation_waypoints",
    "segment_duration_s": "segment_duration",
}
# environment and impedance diagonals mix N/m (position rows) and N m/rad (orientation rows)
ENVIRONMENT_KEYS = {
    "stiffness_diag_N_per_m_Nm_per_rad": "Sc",
    "damping_diag_N_s_per_m_Nm_s_per_rad": "Dc",
    "rest_pose_m_rad": "chi0",
}
WIND_KEYS = {
    "speed_at_ref_height_m_s": "Vw_z0",
    "ref_height_m": "z0",
    "heading_rad": "psi_w",
    "area1_m2": "Ae1",
    "area2_m2": "Ae2",
}
GAIN_KEYS = {
    "g_zeta_rad_s": "g_zeta",
    "g_sigma_rad_s": "g_sigma",
    "gv_rad_s": "gv",
    "Mn_zeta_kg_kgm2": "Mn_zeta",
    "Mn_sigma_kgm2": "Mn_sigma",
    "Kp_sigma_1_s2": "Kp_sigma",
    "Kd_sigma_1_s": "Kd_sigma",
    "eta_min": "eta_min",
    "gamma_g": "gamma_g",
    "r0": "r0",
    "information_floor": "rinv_floor",
    "adaptive_forgetting": "adaptive_forgetting",
    "regressor_cutoff_rad_s": "regressor_cutoff",
    "thrust_guard_N": "thrust_guard",
    "attitude_clamp_rad": "attitude_clamp",
    "force_feedback": "force_feedback",
    "exact_position": "exact_position",
    "xy_commanded_force": "xy_commanded_force",
}
IMPEDANCE_KEYS = {
    "Scd_diag_1_s2": "Scd",
    "Dcd_diag_1_s": "Dcd",
}
ROBOT_KEYS = {
    "m_kg": "m",
    "m0_kg": "m0",
    "m1_kg": "m1",
    "m2_kg": "m2",
    "Ix_kgm2": "Ix",
    "Iy_kgm2": "Iy",
    "Iz_kgm2": "Iz",
    "Ir_kgm2": "Ir",
    "L0_m": "L0",
    "L1_m": "L1",
    "L2_m": "L2",
    "d_m": "d",
    "Kf_N_s2": "Kf",
    "Km_Nm_s2": "Km",
}

SECTIONS = ("scenario", "trajectory", "environment", "wind", "gains", "impedance", "robot", "nominal")


def _plain(v):
    """numpy/tuple values -> YAML-friendly python scalars and lists."""
    if isinstance(v, (np.ndarray, tuple, list)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _dump(obj, keys):
    return {k: _plain(getattr(obj, attr)) for k, attr in keys.items()}


def config_to_dict(cfg: ScenarioConfig) -> dict:
    g = cfg.gains
    return {
        "scenario": _dump(cfg, SCENARIO_KEYS),
        "trajectory": _dump(cfg.trajectory, TRAJECTORY_KEYS),
        "environment": _dump(cfg.env, ENVIRONMENT_KEYS),
        "wind": _dump(cfg.wind, WIND_KEYS),
        "gains": _dump(g, GAIN_KEYS),
        "impedance": _dump(g.impedance, IMPEDANCE_KEYS),
        "robot": _dump(cfg.robot, ROBOT_KEYS),
        "nominal": _dump(cfg.nominal, ROBOT_KEYS),
    }


def _check_value(section, key, value):
    vals = value if isinstance(value, list) else [value]
    for v in _flatten(vals):
        if isinstance(v, bool):
            continue
        if not isinstance(v, (int, float)):
            raise ConfigError(f"{section}.{key}: expected a number, got {v!r}")
        if not math.isfinite(v):
            raise ConfigError(f"{section}.{key}: value must be finite")


def _flatten(vals):
    for v in vals:
        if isinstance(v, list):
            yield from _flatten(v)
        else:
            yield v


def _load(section: str, data, keys: dict, defaults) -> dict:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"section '{section}' must be a mapping")
    unknown = set(data) - set(keys)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{section}': {', '.join(sorted(unknown))}")
    out = {}
    for k, v in data.items():
        _check_value(section, k, v)
        attr = keys[k]
        default = getattr(defaults, attr)
        if isinstance(default, bool) and not isinstance(v, bool):
            raise ConfigError(f"{section}.{k}: expected true/false")
        if isinstance(default, (tuple, list, np.ndarray)):
            out[attr] = tuple(tuple(x) if isinstance(x, list) else x for x in v) if isinstance(v, list) else v
        else:
            out[attr] = v
    return out


def config_from_dict(data: dict | None) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig`; raises :class:`ConfigError` on anything malformed."""
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")
    unknown = set(data) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    base = ScenarioConfig()
    try:
        robot = RobotParams(**_load("robot", data.get("robot"), ROBOT_KEYS, base.robot))
        nominal = RobotParams(**_load("nominal", data.get("nominal"), ROBOT_KEYS, base.nominal))
        traj = TrajectorySpec(**_load("trajectory", data.get("trajectory"), TRAJECTORY_KEYS, base.trajectory))
        env = EnvImpedance(**_load("environment", data.get("environment"), ENVIRONMENT_KEYS, base.env))
        wind = WindParams(**_load("wind", data.get("wind"), WIND_KEYS, base.wind))
        imp = ImpedanceParams(**_load("impedance", data.get("impedance"), IMPEDANCE_KEYS, base.gains.impedance))
        gkw = _load("gains", data.get("gains"), GAIN_KEYS, base.gains)
        for name in ("g_zeta", "Mn_zeta"):
            if name in gkw and len(np.atleast_1d(gkw[name])) not in (1, 6):
                raise ConfigError(f"gains.{name}: need 6 entries")
        for name in ("g_sigma", "Mn_sigma"):
            if name in gkw and len(np.atleast_1d(gkw[name])) not in (1, 2):
                raise ConfigError(f"gains.{name}: need 2 entries")
        gains = ControllerGains(impedance=imp, **gkw)
        skw = _load("scenario", data.get("scenario"), SCENARIO_KEYS, base)
        return ScenarioConfig(trajectory=traj, env=env, wind=wind, gains=gains,
                              robot=robot, nominal=nominal, **skw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


class _Dumper(yaml.SafeDumper):
    pass


# block-style sections, inline vectors
_Dumper.add_representer(list, lambda d, v: d.represent_sequence("tag:yaml.org,2002:seq", v, flow_style=True))


def dumps(cfg: ScenarioConfig) -> str:
    return yaml.dump(config_to_dict(cfg), Dumper=_Dumper, sort_keys=False, default_flow_style=False)


def loads(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    return config_from_dict(data)


def load_config(path) -> ScenarioConfig:
    """Read a YAML config.  ``OSError`` propagates (the CLI maps it to the IO exit code)."""
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
