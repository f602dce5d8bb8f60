"""Counterfactual expected-performance models fitted on the pre-disruption period.

Three model kinds share one forecast interface:

``covariate``
    expected = sigma * physicians(t) * population, with a multiplicative
    calendar-month factor. sigma is the least-squares slope through the
    origin.
``generalized_logistic``
    A + (K - A) / (1 + Q exp(-B t))**(1/nu), multiplicative month factors.
``exponential_smoothing``
    Additive-trend, additive-seasonal (period 12) smoothing with weights
    picked by an exhaustive grid search.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .errors import (
    AlignmentMismatch,
    CovariateMissing,
    CovariateTooShort,
    DegenerateCovariate,
    DuplicateMonth,
    MalformedRow,
    MissingMonth,
    NonConvergence,
    SeriesTooShort,
)
from .series import MonthStamp
from .simplex import minimize

KINDS = ("covariate", "generalized_logistic", "exponential_smoothing")
ALIASES = {"logistic": "generalized_logistic", "ets": "exponential_smoothing"}
MIN_PRE_LENGTH = 24
ETS_GRID = tuple(round(0.05 * k, 2) for k in range(1, 20))
# forecasts are floored at this fraction of the mean fitted value
POSITIVE_FLOOR = 1e-6


@dataclass(frozen=True)
class CovariateSeries:
    start: MonthStamp
    physicians: np.ndarray
    population: float
    ratio_scale: float | None = None

    def __post_init__(self):
        p = np.array(self.physicians, dtype=float)
        if p.ndim != 1 or np.any(~np.isfinite(p)) or np.any(p <= 0):
            raise DegenerateCovariate("physician counts must be positive and finite")
        if not self.population > 0:
            raise DegenerateCovariate("population must be positive")
        p.setflags(write=False)
        object.__setattr__(self, "physicians", p)

    def __len__(self):
        return len(self.physicians)

    def product(self, start, length):
        """physicians(t) * population for ``length`` months from ``start``."""
        k = start - self.start
        if k < 0:
            raise AlignmentMismatch(f"covariates start {self.start}, after {start}")
        if k + length > len(self):
            raise CovariateTooShort(
                f"covariates end {self.start.shift(len(self) - 1)}, "
                f"need through {start.shift(length - 1)}")
        return self.physicians[k: k + length] * self.population


def parse_covariates(text):
    """Parse ``month,physicians,population`` CSV; population must be constant."""
    if text.startswith("﻿"):
        text = text[1:]
    rows = [(i, [f.strip() for f in r]) for i, r in enumerate(csv.reader(io.StringIO(text)), 1)
            if r and any(f.strip() for f in r) and not r[0].lstrip().startswith("#")]
    if not rows:
        raise MalformedRow("empty covariate file", row=1)
    hrow, header = rows[0]
    if [h.lower() for h in header] != ["month", "physicians", "population"]:
        raise MalformedRow("expected header month,physicians,population", row=hrow)
    data = {}
    for lineno, fields in rows[1:]:
        if len(fields) != 3:
            raise MalformedRow(f"expected 3 fields, got {len(fields)}", row=lineno)
        try:
            month = MonthStamp.parse(fields[0])
            phys, pop = float(fields[1]), float(fields[2])
        except ValueError as exc:
            raise MalformedRow(str(exc), row=lineno) from None
        if month in data:
            raise DuplicateMonth(f"duplicate month {month}", row=lineno)
        data[month] = (lineno, phys, pop)
    months = sorted(data)
    for a, b in zip(months, months[1:]):
        if b - a != 1:
            raise MissingMonth(f"gap between {a} and {b}", row=data[b][0])
    pops = np.array([data[m][2] for m in months])
    if np.any(np.abs(pops - pops[0]) > 1e-9 * abs(pops[0])):
        bad = months[int(np.argmax(np.abs(pops - pops[0])))]
        raise MalformedRow("population column must be constant", row=data[bad][0])
    return CovariateSeries(months[0], np.array([data[m][1] for m in months]), float(pops[0]))


@dataclass(frozen=True)
class BaselineModel:
    kind: str
    parameters: dict
    seasonal_factors: tuple | None
    fit_window: tuple  # (first month, last month), inclusive
    fit_sse: float
    fitted: tuple | None = field(default=None, repr=False)

    @property
    def fit_length(self):
        return self.fit_window[1] - self.fit_window[0] + 1

    def to_dict(self):
        return {
            "kind": self.kind,
            "parameters": dict(sorted(self.parameters.items())),
            "seasonal_factors": None if self.seasonal_factors is None
            else list(self.seasonal_factors),
            "fit_window": [str(self.fit_window[0]), str(self.fit_window[1])],
            "fit_sse": self.fit_sse,
            "fitted": None if self.fitted is None else list(self.fitted),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        sf = d.get("seasonal_factors")
        fitted = d.get("fitted")
        return cls(
            kind=d["kind"],
            parameters={k: float(v) for k, v in d["parameters"].items()},
            seasonal_factors=None if sf is None else tuple(float(v) for v in sf),
            fit_window=(MonthStamp.parse(d["fit_window"][0]), MonthStamp.parse(d["fit_window"][1])),
            fit_sse=float(d["fit_sse"]),
            fitted=None if fitted is None else tuple(float(v) for v in fitted),
        )


@dataclass(frozen=True)
class BaselineForecast:
    start: MonthStamp
    values: np.ndarray
    model: BaselineModel | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


def _calendar(start, length):
    """Zero-based calendar month (Jan = 0) of each of ``length`` months."""
    return (start.ordinal + np.arange(length)) % 12


def _month_factors(observed, trend, start):
    """Mean observed/trend ratio per calendar month, rescaled to average 1."""
    ratio = observed / trend
    cal = _calendar(start, len(observed))
    f = np.array([ratio[cal == m].mean() for m in range(12)])
    return tuple(float(v) for v in f / f.mean())


def _check_pre(pre):
    if len(pre) < MIN_PRE_LENGTH:
        raise SeriesTooShort(
            f"pre-period has {len(pre)} months; at least {MIN_PRE_LENGTH} are needed")


def _finish(kind, params, factors, pre, cov=None, fitted=None):
    window = (pre.start, pre.end)
    model = BaselineModel(kind, params, factors, window, 0.0, fitted)
    pred = _predict(model, cov, len(pre))
    sse = float(np.sum((pre.values - pred) ** 2))
    return BaselineModel(kind, params, factors, window, sse, fitted)


# -- covariate --------------------------------------------------------------

def fit_covariate(pre, cov, seasonal=True):
    _check_pre(pre)
    x = cov.product(pre.start, len(pre))
    sxx = float(x @ x)
    if sxx == 0.0:
        raise DegenerateCovariate("physicians * population is identically zero")
    sigma = float(pre.values @ x) / sxx
    if not sigma > 0:
        raise DegenerateCovariate("fitted ratio is not positive")
    factors = _month_factors(pre.values, sigma * x, pre.start) if seasonal else None
    return _finish("covariate", {"sigma": sigma}, factors, pre, cov)


# -- generalized logistic ---------------------------------------------------

def logistic_shape(t, q, b, nu):
    """(1 + q exp(-b t))**(-1/nu), evaluated in log space."""
    t = np.asarray(t, dtype=float)
    return np.exp(-np.log1p(q * np.exp(-b * t)) / nu)


def generalized_logistic(t, a, k, q, b, nu):
    return a + (k - a) * logistic_shape(t, q, b, nu)


def _logistic_linear(y, g):
    """Best (A, K - A) >= 0 for fixed shape g, plus its SSE."""
    design = np.column_stack([np.ones_like(g), g])
    coef, rnorm = nnls(design, y)
    return coef, rnorm * rnorm


LOGISTIC_LOWER = (1e-6, 1e-4, 1e-2)
LOGISTIC_UPPER = (1e6, 5.0, 1e2)
LOGISTIC_MAX_ITER = 5000


def fit_generalized_logistic(pre, seasonal=True):
    """Least-squares generalized logistic trend on the pre period.

    The shape parameters (Q, B, nu) are searched by the simplex minimizer;
    for each candidate shape the plateau pair (A, K - A) is solved exactly
    by non-negative least squares.
    """
    _check_pre(pre)
    y = pre.values
    t = np.arange(len(y), dtype=float)

    def objective(p):
        return _logistic_linear(y, logistic_shape(t, *p))[1]

    starts = [
        (q, b, nu)
        for q, b, nu in itertools.product((1.0, 10.0), (0.02, 0.2), (1.0,))
    ] + [(1.0, 0.05, 0.2), (1.0, 0.05, 5.0)]
    # near-linear trends drift along a flat valley toward the Q bound, so
    # the budget is larger than the minimizer default
    res = minimize(objective, LOGISTIC_LOWER, LOGISTIC_UPPER, starts,
                   max_iter=LOGISTIC_MAX_ITER)
    q, b, nu = (float(v) for v in res.x)
    (a, d), sse = _logistic_linear(y, logistic_shape(t, q, b, nu))
    if not np.isfinite(sse):
        raise NonConvergence("generalized logistic fit failed", sse=sse,
                             parameters={"Q": q, "B": b, "nu": nu})
    # a flat series is represented exactly by the plateau alone
    flat = float(np.sum((y - y.mean()) ** 2))
    if flat <= sse * (1 + 1e-9) + 1e-24 * float(y @ y):
        a, d = float(y.mean()), 0.0
    params = {"A": float(a), "K": float(a + d), "Q": q, "B": b, "nu": nu}
    if not res.converged and sse > 1e-12 * float(y @ y):
        raise NonConvergence("generalized logistic fit hit the iteration budget",
                             sse=sse, parameters=params)
    factors = None
    if seasonal:
        trend = generalized_logistic(t, *(params[k] for k in ("A", "K", "Q", "B", "nu")))
        factors = _month_factors(y, trend, pre.start)
    return _finish("generalized_logistic", params, factors, pre)


# -- exponential smoothing --------------------------------------------------

def _hw_initial(y):
    first, second = y[:12], y[12:24]
    level0 = first.mean()
    trend0 = (second.mean() - level0) / 12.0
    pos = np.arange(12)
    season = 0.5 * ((first - (level0 + (pos - 5.5) * trend0))
                    + (second - (level0 + (pos + 6.5) * trend0)))
    season = season - season.mean()
    return level0 - 6.5 * trend0, trend0, season


def _hw_run(y, alpha, beta, gamma):
    """Run additive Holt-Winters for arrays of weights (broadcast over G).

    Returns one-step-ahead predictions (G, n) and final states.
    """
    alpha, beta, gamma = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (alpha, beta, gamma))
    g = alpha.shape[0]
    level0, trend0, season0 = _hw_initial(y)
    level = np.full(g, level0)
    trend = np.full(g, trend0)
    season = np.tile(season0, (g, 1))
    pred = np.empty((g, len(y)))
    for t, yt in enumerate(y):
        s = season[:, t % 12]
        pred[:, t] = level + trend + s
        new_level = alpha * (yt - s) + (1 - alpha) * (level + trend)
        trend = beta * (new_level - level) + (1 - beta) * trend
        level = new_level
        season[:, t % 12] = gamma * (yt - level) + (1 - gamma) * s
    return pred, level, trend, season


def fit_exponential_smoothing(pre):
    _check_pre(pre)
    y = pre.values
    grid = np.array(list(itertools.product(ETS_GRID, repeat=3)))
    pred, _, _, _ = _hw_run(y, grid[:, 0], grid[:, 1], grid[:, 2])
    sse = np.sum((pred - y) ** 2, axis=1)
    k = int(np.argmin(sse))
    a, b, g = (float(v) for v in grid[k])
    pred, level, trend, season = _hw_run(y, a, b, g)
    n = len(y)
    params = {"alpha": a, "beta": b, "gamma": g,
              "level": float(level[0]), "trend": float(trend[0])}
    # final seasonal terms keyed by calendar month of the position they belong to
    cal = _calendar(pre.start, 12)
    for pos in range(12):
        params[f"season_{cal[pos] + 1:02d}"] = float(season[0, pos])
    params["n_fit"] = float(n)
    return _finish("exponential_smoothing", params, None, pre,
                   fitted=tuple(float(v) for v in pred[0]))


# -- forecasting ------------------------------------------------------------

def _predict(model, cov, horizon):
    start = model.fit_window[0]
    t = np.arange(horizon, dtype=float)
    cal = _calendar(start, horizon)
    p = model.parameters
    if model.kind == "covariate":
        if cov is None:
            raise CovariateMissing("covariate model needs covariates to forecast")
        mean = p["sigma"] * cov.product(start, horizon)
    elif model.kind == "generalized_logistic":
        mean = generalized_logistic(t, p["A"], p["K"], p["Q"], p["B"], p["nu"])
    elif model.kind == "exponential_smoothing":
        n = int(p["n_fit"])
        fitted = np.asarray(model.fitted if model.fitted is not None else [], dtype=float)
        out = np.empty(horizon)
        m = min(n, horizon, len(fitted))
        out[:m] = fitted[:m]
        for h in range(1, horizon - n + 1):
            month = cal[n - 1 + h] + 1
            out[n - 1 + h] = p["level"] + h * p["trend"] + p[f"season_{month:02d}"]
        return out
    else:
        raise ValueError(f"unknown model kind {model.kind!r}")
    if model.seasonal_factors is not None:
        mean = mean * np.asarray(model.seasonal_factors)[cal]
    return mean


def forecast(model, cov=None, horizon=None):
    """Expected performance for ``horizon`` months from the fit-window start."""
    if horizon is None:
        horizon = model.fit_length
    if horizon < model.fit_length:
        raise ValueError("horizon must cover the fit window")
    values = _predict(model, cov, horizon)
    fit_part = values[: model.fit_length]
    floor = POSITIVE_FLOOR * max(float(np.mean(np.abs(fit_part))), 1e-300)
    values = np.where(values > floor, values, floor)
    return BaselineForecast(model.fit_window[0], values, model)


def fit_baseline(kind, pre, cov=None):
    kind = ALIASES.get(kind, kind)
    if kind == "covariate":
        if cov is None:
            raise CovariateMissing("covariate baseline requested without covariates")
        return fit_covariate(pre, cov)
    if kind == "generalized_logistic":
        return fit_generalized_logistic(pre)
    if kind == "exponential_smoothing":
        return fit_exponential_smoothing(pre)
    raise ValueError(f"unknown baseline kind {kind!r}; expected one of {KINDS}")
