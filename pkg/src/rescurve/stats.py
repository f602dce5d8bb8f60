"""Group summaries and Pearson correlation with Student-t p-values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch, NumericalNonConvergence, TooFewPoints, ZeroVariance

Z95 = 1.96
CF_MAX_ITER = 200
CF_EPS = 1e-15
_TINY = 1e-300


@dataclass(frozen=True)
class GroupSummary:
    label: str
    mean: float
    ci_low: float
    ci_high: float
    count: int

    def to_dict(self):
        return {"label": self.label, "mean": self.mean, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "count": self.count}


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    p_value: float
    count: int

    def to_dict(self):
        return {"coefficient": self.coefficient, "p": self.p_value, "n": self.count}


def group_mean_ci(values, label=""):
    """Mean with a normal-approximation 95% interval (1.96 s / sqrt(M))."""
    x = np.asarray(list(values), dtype=float)
    if x.size == 0:
        raise EmptyInput("cannot summarize an empty group")
    m = float(x.mean())
    if x.size == 1:
        return GroupSummary(label, m, m, m, 1)
    half = Z95 * float(x.std(ddof=1)) / math.sqrt(x.size)
    return GroupSummary(label, m, m - half, m + half, int(x.size))


def _betacf(a, b, x):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_EPS:
            return h
    raise NumericalNonConvergence(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided(t, df):
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    t2 = t * t
    x, y = df / (df + t2), t2 / (df + t2)
    # near t = 0, x rounds toward 1; use the mirrored argument instead
    if y < x:
        return 1.0 - betainc(0.5, df / 2.0, y)
    return betainc(df / 2.0, 0.5, x)


def student_t_cdf(t, df):
    tail = 0.5 * student_t_two_sided(t, df)
    return 1.0 - tail if t > 0 else tail


def pearson(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    n = x.size
    if n < 3:
        raise TooFewPoints(f"need at least 3 paired values, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("both variables need nonzero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = min(max(r, -1.0), 1.0)
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        t = r * math.sqrt(df / (1.0 - r * r))
        p = student_t_two_sided(t, df)
    return CorrelationResult(r, min(max(p, 0.0), 1.0), n)
