import numpy as np
import pytest

from aerialmanip.kinematics import arm_geometry, rotation_from_euler
from aerialmanip.params import RobotParams


@pytest.fixture
def params():
    return RobotParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, attitude=0.6, joints=1.2):
    """Random (q, qd) away from the Euler-angle singular set and the yaw wrap.

    States whose end-effector pitch comes within 0.25 rad of +/-pi/2 are redrawn.
    """
    while True:
        q = np.concatenate([rng.uniform(-2, 2, 3), rng.uniform(-1, 1, 1),
                            rng.uniform(-attitude, attitude, 2), rng.uniform(-joints, joints, 2)])
        R = rotation_from_euler(*q[3:6]) @ arm_geometry(q[6], q[7], RobotParams()).R_be
        if abs(R[2, 0]) < np.cos(0.25):
            return q, rng.normal(0.0, 1.0, 8)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
