import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from rescurve.betafit import (BetaDisruptionParams, beta_loss, beta_loss_integral,
                              fit_disruption)
from rescurve.detect import DisruptionWindow
from rescurve.errors import DegenerateWindow

B = BetaDisruptionParams


def test_symmetric_peak_value():
    assert beta_loss(B(2.0, 1.0, 1.0, 10.0), 5.0) == pytest.approx(2.0, abs=1e-12)


def test_zero_at_and_outside_edges():
    p = B(0.7, 2.5, 0.8, 9.0, 4.0)
    assert np.all(beta_loss(p, [0.0, 4.0, 13.0, 20.0]) == 0.0)


def test_asymmetric_hand_values():
    p = B(3.0, 2.0, 1.0, 1.0)
    assert beta_loss(p, 2 / 3) == pytest.approx(3.0, rel=1e-12)
    assert beta_loss(p, 1 / 3) == pytest.approx(1.5, rel=1e-12)


def test_peak_numerically_maximal():
    p = B(0.4, 2.2, 5.1, 14.0, 3.0)
    t = np.linspace(3.0, 17.0, 200001)
    y = beta_loss(p, t)
    assert t[np.argmax(y)] == pytest.approx(p.peak_time, abs=1e-3)
    assert y.max() == pytest.approx(0.4, rel=1e-8)


@given(st.floats(0.05, 40), st.floats(0.05, 40))
def test_peak_equals_alpha(theta, vartheta):
    p = B(1.7, theta, vartheta, 6.0, 1.0)
    assert beta_loss(p, p.peak_time) == pytest.approx(1.7, rel=1e-6)


def test_integral_closed_forms():
    assert beta_loss_integral(B(1.0, 1.0, 1.0, 1.0)) == pytest.approx(2 / 3, abs=1e-10)
    assert beta_loss_integral(B(1.0, 2.0, 2.0, 1.0)) == pytest.approx(16 / 30, rel=1e-12)
    assert beta_loss_integral(B(2.0, 1.3, 3.1, 7.0)) == pytest.approx(
        2 * beta_loss_integral(B(1.0, 1.3, 3.1, 7.0)), rel=1e-14)


# quad warns on tiny partial areas where the integrand is nearly zero
@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@settings(max_examples=60, deadline=None)
@given(st.floats(0.3, 12), st.floats(0.3, 12), st.floats(1, 30), st.floats(0, 1))
def test_integral_matches_quadrature(theta, vartheta, T, frac):
    p = B(0.9, theta, vartheta, T, 2.0)
    full, _ = quad(lambda x: beta_loss(p, x), 2.0, 2.0 + T, epsabs=0, epsrel=1e-12, limit=200)
    assert beta_loss_integral(p) == pytest.approx(full, rel=1e-8)
    upto = 2.0 + frac * T
    part, _ = quad(lambda x: beta_loss(p, x), 2.0, upto, epsabs=1e-14, epsrel=1e-12, limit=200)
    assert beta_loss_integral(p, upto) == pytest.approx(part, rel=1e-8, abs=1e-12)


def test_rates():
    r = B(1.0, 2.0, 4.0, 10.0).rates()
    assert r.u == pytest.approx(0.05) and r.v == pytest.approx(0.025)


def test_rejects_nonpositive():
    with pytest.raises(ValueError):
        B(0.0, 1.0, 1.0, 1.0)


def _window(p, n, recovered=True):
    start = int(p.start_index)
    end = int(round(p.end_index)) if recovered else n
    peak = int(round(p.peak_time))
    return DisruptionWindow(start, end, peak, recovered, 0.4)


def test_exact_roundtrip():
    truth = B(0.4, 2.0, 3.0, 12.0, 5.0)
    t = np.arange(30.0)
    exp_ = np.ones(30)
    obs = exp_ - beta_loss(truth, t)
    fit = fit_disruption(_window(truth, 30), obs, exp_)
    for name in ("alpha", "theta", "vartheta"):
        assert getattr(fit.params, name) == pytest.approx(getattr(truth, name), rel=1e-2)
    assert fit.rates.u == pytest.approx(truth.rates().u, rel=1e-2)
    assert fit.rates.v == pytest.approx(truth.rates().v, rel=1e-2)
    assert fit.recovery_reliable


def test_noisy_roundtrip():
    truth = B(0.4, 2.0, 3.0, 12.0, 5.0)
    t = np.arange(30.0)
    exp_ = np.ones(30)
    rng = np.random.default_rng(11)
    obs = (exp_ - beta_loss(truth, t)) * (1 + rng.normal(0, 0.01, 30))
    fit = fit_disruption(_window(truth, 30), obs, exp_)
    assert fit.params.alpha == pytest.approx(0.4, rel=0.05)
    assert fit.rates.u == pytest.approx(truth.rates().u, rel=0.10)


def test_truncated_roundtrip():
    truth = B(0.4, 2.0, 3.0, 15.0, 5.0)
    n = 5 + 9 + 1  # tau reaches 0.6 at the last month
    t = np.arange(float(n))
    exp_ = np.ones(n)
    obs = exp_ - beta_loss(truth, t)
    fit = fit_disruption(_window(truth, n, recovered=False), obs, exp_)
    assert not fit.recovery_reliable
    assert fit.params.alpha == pytest.approx(0.4, rel=0.10)
    assert fit.rates.u == pytest.approx(truth.rates().u, rel=0.10)


def test_edge_slack_recovers_late_anchor():
    truth = B(0.3, 2.0, 1.2, 12.0, 10.0)
    t = np.arange(40.0)
    exp_ = np.ones(40)
    obs = exp_ - beta_loss(truth, t)
    late = DisruptionWindow(11, 22, int(truth.peak_time), True, 0.3)
    fit = fit_disruption(late, obs, exp_, edge_slack=1)
    assert fit.window.start_index == 10
    assert fit.params.theta == pytest.approx(2.0, rel=1e-2)


def test_degenerate_window():
    obs = np.ones(10)
    with pytest.raises(DegenerateWindow):
        fit_disruption(DisruptionWindow(2, 6, 4, True, 0.1), obs, np.ones(10))


def test_log_space_no_overflow():
    p = B(1.0, 50.0, 50.0, 10.0)
    v = beta_loss(p, np.linspace(0, 10, 101))
    assert np.all(np.isfinite(v)) and v.max() == pytest.approx(1.0, rel=1e-9)
    assert math.isfinite(beta_loss_integral(p))
