"""Beta-family disruption curves: evaluation, closed-form area, and fitting.

A single disruption removes

    loss(t) = alpha * C(theta, vartheta) * tau**theta * (1 - tau)**vartheta,
    tau = (t - t_s) / T,  0 < tau < 1,

from the expected performance, with C = (theta+vartheta)**(theta+vartheta)
/ (theta**theta * vartheta**vartheta) chosen so the peak loss is exactly
``alpha`` (reached at tau = theta / (theta + vartheta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .detect import DisruptionWindow
from .errors import AllStartsFailed, DegenerateWindow, FitError, FitFailed
from .simplex import minimize

SHAPE_BOUNDS = (0.05, 50.0)
SHAPE_SUMS = (2.0, 6.0, 12.0)
EXACT_FIT = 1e-16  # SSE below this share of the loss energy counts as a perfect fit


@dataclass(frozen=True)
class BetaDisruptionParams:
    alpha: float
    theta: float
    vartheta: float
    duration: float
    start_index: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "theta", "vartheta", "duration"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def peak_fraction(self):
        return self.theta / (self.theta + self.vartheta)

    @property
    def peak_time(self):
        return self.start_index + self.duration * self.peak_fraction

    @property
    def end_index(self):
        return self.start_index + self.duration

    def rates(self):
        return Rates(u=1.0 / (self.theta * self.duration),
                     v=1.0 / (self.vartheta * self.duration))

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "theta": self.theta,
            "vartheta": self.vartheta,
            "duration": self.duration,
            "start_index": self.start_index,
        }


@dataclass(frozen=True)
class Rates:
    u: float  # disruption rate, 1 / (theta T)
    v: float  # recovery rate, 1 / (vartheta T)


@dataclass(frozen=True)
class FittedDisruption:
    window: DisruptionWindow
    params: BetaDisruptionParams
    rates: Rates
    sse: float
    recovery_reliable: bool
    converged: bool = True

    def to_dict(self, start_month=None):
        return {
            "start_month": str(start_month) if start_month is not None else None,
            "start_index": self.params.start_index,
            "duration_months": self.params.duration,
            "alpha": self.params.alpha,
            "theta": self.params.theta,
            "vartheta": self.params.vartheta,
            "u": self.rates.u,
            "v": self.rates.v,
            "sse": self.sse,
            "recovery_reliable": self.recovery_reliable,
            "converged": self.converged,
        }


def log_norm_const(theta, vartheta):
    s = theta + vartheta
    return s * math.log(s) - theta * math.log(theta) - vartheta * math.log(vartheta)


def beta_loss(params, t):
    """Loss at month(s) ``t``; zero outside the open window (t_s, t_s + T)."""
    t = np.asarray(t, dtype=float)
    tau = (t - params.start_index) / params.duration
    inside = (tau > 0.0) & (tau < 1.0)
    out = np.zeros_like(tau)
    ti = tau[inside]
    logc = log_norm_const(params.theta, params.vartheta)
    out[inside] = params.alpha * np.exp(
        logc + params.theta * np.log(ti) + params.vartheta * np.log1p(-ti)
    )
    return out if out.ndim else float(out)


def beta_loss_integral(params, upto=None):
    """Area under :func:`beta_loss`, optionally only up to month ``upto``.

    Uses the Euler beta function B(theta+1, vartheta+1) through log-gamma;
    the partial area uses the regularized incomplete beta function.
    """
    a, b = params.theta + 1.0, params.vartheta + 1.0
    log_b = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    total = params.alpha * params.duration * math.exp(
        log_norm_const(params.theta, params.vartheta) + log_b)
    if upto is None:
        return total
    tau = (upto - params.start_index) / params.duration
    if tau <= 0:
        return 0.0
    if tau >= 1:
        return total
    return total * float(betainc(a, b, tau))


def _shape_start(frac, total):
    lo, hi = SHAPE_BOUNDS
    frac = min(max(frac, 0.05), 0.95)
    return (min(max(frac * total, lo), hi), min(max((1 - frac) * total, lo), hi))


def fit_disruption(window, observed, forecast, edge_slack=0, lower_limit=None,
                   upper_limit=None, min_duration=2):
    """Least-squares beta curve for one detected window.

    ``observed`` and ``forecast`` are aligned value arrays (or objects with a
    ``values`` attribute). When recovery was observed the curve spans the
    window exactly; otherwise its duration is fitted between the observed
    span and three times that span.

    With ``edge_slack`` k > 0 the anchor and (if observed) the recovery month
    may each move up to k months either way, staying within
    ``[lower_limit, upper_limit]`` (defaults: the series ends). All variants
    are scored on the same widened range and the lowest SSE wins. Noise
    near the detection floor otherwise misplaces edges whose loss rises or
    fades slowly. Variants shorter than ``min_duration`` are skipped.
    """
    n = len(getattr(observed, "values", observed))
    lo = 0 if lower_limit is None else lower_limit
    hi = n - 1 if upper_limit is None else upper_limit
    s_opts = [s for s in range(window.start_index - edge_slack, window.start_index + edge_slack + 1)
              if lo <= s < window.peak_index] or [window.start_index]
    if window.recovery_observed:
        e_opts = [e for e in range(window.end_index - edge_slack, window.end_index + edge_slack + 1)
                  if window.peak_index < e <= hi] or [window.end_index]
    else:
        e_opts = [window.end_index]
    scored = DisruptionWindow(min(s_opts), max(e_opts), window.peak_index,
                              window.recovery_observed, window.peak_relative_loss)

    obs = np.asarray(getattr(observed, "values", observed), dtype=float)
    exp_ = np.asarray(getattr(forecast, "values", forecast), dtype=float)
    seg = (exp_ - obs)[scored.start_index: min(scored.end_index, n - 1) + 1]
    exact = EXACT_FIT * float(seg @ seg)

    detected = (window.start_index, window.end_index)
    variants = [detected] + [(a, b) for a in s_opts for b in e_opts
                             if (a, b) != detected and b - a >= max(2, min_duration)]
    best, first_error = None, None
    for start, end in variants:
        trial = DisruptionWindow(start, end, window.peak_index, window.recovery_observed,
                                 window.peak_relative_loss, window.phase_split_index)
        try:
            fit = _fit_window(trial, obs, exp_, scored)
        except FitError as exc:
            first_error = first_error or exc
            continue
        if best is None or fit.sse < best.sse:
            best = fit
        if best.sse <= exact:
            break  # nothing left for another edge placement to explain
    if best is None:
        if first_error is not None:
            raise first_error
        raise DegenerateWindow(f"window starting at {window.start_index} is too short to fit")
    return best


def _fit_window(window, observed, forecast, scored=None):
    obs = np.asarray(getattr(observed, "values", observed), dtype=float)
    exp_ = np.asarray(getattr(forecast, "values", forecast), dtype=float)
    if obs.shape != exp_.shape:
        raise ValueError("observed and forecast must be aligned")
    n = len(obs)
    start = window.start_index
    last = min(window.end_index, n - 1)
    if not 0 <= start < last < n:
        raise ValueError(f"window [{start}, {window.end_index}) invalid for length {n}")

    scored = scored or window
    s0, s1 = scored.start_index, min(scored.end_index, n - 1)
    t = np.arange(s0, s1 + 1, dtype=float)
    loss = exp_[s0: s1 + 1] - obs[s0: s1 + 1]
    peak_loss = float(loss.max())
    if peak_loss <= 0:
        raise DegenerateWindow(f"no positive loss inside window starting at {start}")
    peak_t = float(t[int(np.argmax(loss))])
    lo_s, hi_s = SHAPE_BOUNDS
    span = float(window.end_index - start)

    if window.recovery_observed:
        def objective(p):
            r = loss - beta_loss(BetaDisruptionParams(p[0], p[1], p[2], span, start), t)
            return float(r @ r)

        frac = (peak_t - start) / span
        starts = [(peak_loss,) + _shape_start(frac, s) for s in SHAPE_SUMS]
        lower = [0.0, lo_s, lo_s]
        upper = [2.0 * peak_loss, hi_s, hi_s]
    else:
        def objective(p):
            r = loss - beta_loss(BetaDisruptionParams(p[0], p[1], p[2], p[3], start), t)
            return float(r @ r)

        starts = []
        for scale in (1.25, 2.0):
            T0 = scale * span
            frac = (peak_t - start) / T0
            starts += [(peak_loss,) + _shape_start(frac, s) + (T0,) for s in SHAPE_SUMS]
        lower = [0.0, lo_s, lo_s, span]
        upper = [2.0 * peak_loss, hi_s, hi_s, 3.0 * span]

    try:
        res = minimize(objective, lower, upper, starts)
    except AllStartsFailed as exc:
        raise FitFailed(f"window starting at {start}: {exc}") from exc

    p = res.x
    T = span if window.recovery_observed else float(p[3])
    params = BetaDisruptionParams(float(p[0]), float(p[1]), float(p[2]), T, float(start))
    return FittedDisruption(
        window=window,
        params=params,
        rates=params.rates(),
        sse=res.fun,
        recovery_reliable=bool(window.recovery_observed),
        converged=res.converged,
    )
