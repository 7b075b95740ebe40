"""Quadrotor with a two-link arm: disturbance-observer inner loop, FTRLS
contact-force estimation, task-space impedance outer loop and a
deterministic closed-loop simulator."""

__version__ = "0.1.0"

from .params import RobotParams, GeneralizedState  # noqa: E402,F401
from .sim import ControllerGains, ScenarioConfig, TrajectorySpec, run_scenario  # noqa: E402,F401
