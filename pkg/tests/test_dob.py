import numpy as np
import pytest

from aerialmanip.dob import (
    DObBank,
    DObChannel,
    LowPass,
    characteristic_roots,
    damping_ratio,
    decoupled_reference_check,
    max_robust_gain,
    sampled_loop_poles,
    tustin_lowpass,
    validate_robustness,
)
from aerialmanip.errors import ConstraintViolation


def test_tustin_coefficients():
    a, b = tustin_lowpass(100.0, 1e-3)
    assert a == pytest.approx(1.9 / 2.1) and b == pytest.approx(0.1 / 2.1)
    assert a + 2 * b == pytest.approx(1.0)  # unit DC gain
    with pytest.raises(ValueError):
        tustin_lowpass(3000.0, 1e-3)


def test_lowpass_step_response():
    lp = LowPass(10.0, 1e-4, 0.0)
    y = [lp.step(1.0) for _ in range(5000)]
    # 0.5 s = 5 time constants
    assert y[-1] == pytest.approx(1 - np.exp(-5), abs=1e-3)


def run_double_integrator(ch, M, D, seconds, dt=1e-3, qdd_des=0.0):
    """Plant ``M qdd = tau - D`` under the observer; returns the estimate history."""
    v = 0.0
    tau = np.zeros(ch.size)
    hist = []
    for _ in range(int(round(seconds / dt))):
        tau, est = ch.step(np.full(ch.size, qdd_des), np.full(ch.size, v), tau)
        v += dt * (tau[0] - D) / M
        hist.append(est[0])
    return np.array(hist)


def test_rest_without_disturbance():
    ch = DObChannel(1.0, 40.0)
    est = run_double_integrator(ch, 1.0, 0.0, 0.5)
    assert np.all(est == 0)


@pytest.mark.parametrize("g", [20.0, 40.0])
@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_constant_disturbance_settles(g, alpha):
    # the estimate converges at the effective bandwidth alpha*g
    D = 2.5
    ch = DObChannel(alpha * 1.0, g)
    est = run_double_integrator(ch, 1.0, D, 5.0 / (alpha * g))
    assert abs(est[-1] - D) < 0.01 * D


def test_steady_state_reset_is_exact():
    ch = DObChannel([0.5, 2.0], [40.0, 20.0], 100.0)
    ch.reset(tau_dis=[1.5, -3.0], qd=[0.2, -1.0])
    for _ in range(100):
        _, est = ch.step([0.0, 0.0], [0.2, -1.0], [1.5, -3.0])
    assert np.allclose(est, [1.5, -3.0], atol=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0])
def test_poles_match_characteristic_polynomial(alpha):
    roots = characteristic_roots(alpha, 40.0, 100.0)
    poles = sampled_loop_poles(alpha, 1.0, 40.0, 100.0, dt=1e-4)
    for r in roots:
        nearest = poles[np.argmin(np.abs(poles - r))]
        assert abs(nearest - r) < 0.01 * abs(r)


def test_characteristic_roots_closed_form():
    r = characteristic_roots(0.5, 40.0, 100.0)
    assert np.allclose(sorted(r.real), [-50 - np.sqrt(500), -50 + np.sqrt(500)])


def test_robustness_examples():
    assert damping_ratio(0.5, 40.0, 100.0) == pytest.approx(1.118, abs=5e-4)
    reports = validate_robustness(DObChannel(0.5, 40.0, 100.0), 1.0)
    assert reports[0].ok and reports[0].alpha_g == 20.0 and reports[0].limit == 50.0
    with pytest.raises(ConstraintViolation):
        validate_robustness(DObChannel(1.0, 200.0, 100.0), 1.0)
    # the boundary itself is admissible
    assert validate_robustness(DObChannel(1.0, 50.0, 100.0), 1.0)[0].ok
    with pytest.raises(ConstraintViolation):
        validate_robustness(DObChannel(1.0, 50.01, 100.0), 1.0)


def test_max_robust_gain():
    assert max_robust_gain(0.5, 1.0, 100.0) == pytest.approx(100.0)


def test_bank_validation_uses_worst_case_inertia():
    bank = DObBank.build([40.0] * 6, [40.0] * 2, Mn_zeta=[1.0] * 6, Mn_sigma=[1.0] * 2)
    assert len(bank.validate(np.ones(8))) == 8
    lo = np.ones(8)
    lo[5] = 0.5  # phi channel: alpha g = 80 > 50
    with pytest.raises(ConstraintViolation) as info:
        bank.validate(lo)
    assert "phi" in str(info.value)


def test_invalid_channel_parameters():
    with pytest.raises(ValueError):
        DObChannel(0.0, 40.0)
    with pytest.raises(ValueError):
        DObChannel(1.0, -1.0)


def test_decoupled_reference_check():
    t = np.arange(1000) * 1e-3
    a = np.column_stack([np.sin(t), np.cos(t)])
    assert np.all(decoupled_reference_check(t, a, a.copy(), 10.0) < 1e-9)
    b = a.copy()
    b[:, 0] += 1.0
    assert decoupled_reference_check(t, a, b, 10.0)[0] > 0.9


def test_channels_are_independent(rng):
    a = DObChannel([0.5, 2.0, 1.0], [40.0, 20.0, 30.0])
    b = DObChannel([0.5, 2.0, 1.0], [40.0, 20.0, 30.0])
    for _ in range(200):
        qdd, qd, tau = rng.normal(size=(3, 3))
        ta, ea = a.step(qdd, qd, tau)
        qd2, tau2 = qd.copy(), tau.copy()
        qd2[1] += 5.0  # disturb channel 1 only
        tau2[1] -= 3.0
        tb, eb = b.step(qdd, qd2, tau2)
        assert np.array_equal(ta[[0, 2]], tb[[0, 2]]) and np.array_equal(ea[[0, 2]], eb[[0, 2]])


def test_disturbance_step_rejected_at_observer_rate():
    # a disturbance step is absorbed with time constant close to 1/g
    g, D = 40.0, 1.0
    ch = DObChannel(1.0, g)
    est = run_double_integrator(ch, 1.0, D, 0.3)
    k = int(np.argmax(est >= (1 - np.exp(-1)) * D))
    assert k * 1e-3 == pytest.approx(1 / g, rel=0.35)
