import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import trapezoid
from rescurve.betafit import BetaDisruptionParams, FittedDisruption, beta_loss
from rescurve.detect import DisruptionWindow
from rescurve.errors import NoDisruptions
from rescurve.indices import (DisruptionProfile, IndexPair, adaptability,
                              adaptability_from_rates, classify, compute_indices, resilience)


def fitted(alpha, theta, vartheta, T, start, recovered=True):
    p = BetaDisruptionParams(alpha, theta, vartheta, T, start)
    w = DisruptionWindow(int(start), int(start + T), int(round(p.peak_time)), recovered, alpha)
    return FittedDisruption(w, p, p.rates(), 0.0, recovered)


def profile(*ds, n=None):
    return DisruptionProfile("x", tuple(ds), n)


def test_rho_examples():
    assert adaptability_from_rates([0.5, 0.25]) == pytest.approx(0.5)
    assert adaptability_from_rates([0.25, 0.5]) == pytest.approx(-0.5)
    assert adaptability_from_rates([0.3]) == 1.0
    with pytest.raises(NoDisruptions):
        adaptability_from_rates([])


@given(st.lists(st.floats(1e-3, 10), min_size=2, max_size=6))
def test_rho_bounded(rates):
    assert -1.0 <= adaptability_from_rates(rates) <= 1.0


def test_rho_recovery_basis_skips_unrecovered():
    a = fitted(0.2, 1, 2, 10, 0)            # v = 1/20
    b = fitted(0.2, 1, 1, 10, 12)           # v = 1/10, faster recovery
    c = fitted(0.2, 1, 4, 10, 24, recovered=False)
    pr = profile(a, b, c)
    assert adaptability(pr, "recovery") == pytest.approx(0.5)
    with pytest.raises(NoDisruptions):
        adaptability(profile(c), "recovery")


def test_parabola_example_trapezoid():
    d = fitted(0.3, 1, 1, 10, 0)
    P = np.ones(11)
    O = P - beta_loss(d.params, np.arange(11.0))
    r = resilience(O, P, profile(d), quadrature="trapezoid")
    # monthly samples of the parabola sum to 1.98 rather than the exact 2
    assert r == pytest.approx(1 - 1.98 / 10, abs=1e-12)
    # the corrected rule recovers the closed form
    assert resilience(O, P, profile(d)) == pytest.approx(0.8, abs=1e-12)


def test_identity_and_total_loss():
    d = fitted(0.3, 1.5, 2.0, 8, 2)
    P = np.full(14, 2.0)
    for q in ("corrected", "trapezoid"):
        assert resilience(P, P, profile(d), quadrature=q) == 1.0
        assert resilience(np.zeros(14), P, profile(d), quadrature=q) == 0.0


def test_overperformance_is_clipped():
    d = fitted(0.3, 1, 1, 10, 0)
    P = np.ones(11)
    O = P - beta_loss(d.params, np.arange(11.0))
    O_up = O.copy()
    O_up[0] = 1.5  # month at the anchor over target
    assert resilience(O_up, P, profile(d), quadrature="trapezoid") == resilience(
        O, P, profile(d), quadrature="trapezoid")


def test_contiguous_vs_windows_span():
    a = fitted(0.3, 1, 1, 6, 0)
    b = fitted(0.3, 1, 1, 6, 10)
    t = np.arange(20.0)
    P = np.ones(20)
    O = P - beta_loss(a.params, t) - beta_loss(b.params, t)
    pr = profile(a, b)
    lost = 2 * (2 / 3) * 0.3 * 6
    assert resilience(O, P, pr, span="contiguous") == pytest.approx(1 - lost / 16, abs=1e-12)
    assert resilience(O, P, pr, span="windows") == pytest.approx(1 - lost / 12, abs=1e-12)


def test_span_end_clipped_to_series():
    d = fitted(0.3, 1, 1, 10, 4, recovered=False)
    P = np.ones(10)
    O = P - beta_loss(d.params, np.arange(10.0))
    r = resilience(O, P, profile(d), quadrature="trapezoid")
    assert r == pytest.approx(1 - trapezoid(P[4:] - O[4:]) / 5)


def test_classify_strict():
    c = classify(IndexPair(0.58, 0.70, 2))
    assert c.high_adaptability and not c.high_resilience
    assert not classify(IndexPair(0.5, 0.9, 2)).high_adaptability
    c = classify(IndexPair(-0.2, 0.98, 2))
    assert (c.high_adaptability, c.high_resilience) == (False, True)


def test_no_disruption_convention():
    pair = compute_indices(np.ones(5), np.ones(5), profile())
    assert (pair.adaptability, pair.resilience, pair.no_disruptions) == (1.0, 1.0, True)


def test_recovery_basis_without_recovery_is_nan():
    d = fitted(0.3, 1, 1, 10, 2, recovered=False)
    P = np.ones(8)
    O = P - beta_loss(d.params, np.arange(8.0))
    pair = compute_indices(O, P, profile(d), basis="recovery")
    assert math.isnan(pair.adaptability)
    assert pair.to_dict()["rho"] is None
