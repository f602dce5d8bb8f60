"""Synthetic scenarios with known injected disruptions.

Used as the ground-truth oracle: generate expected and observed series
from a trend, a sinusoidal season, beta-shaped losses, and seeded
multiplicative noise, then score a pipeline report against the truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .betafit import BetaDisruptionParams, beta_loss, beta_loss_integral
from .errors import InvalidSpec, LossExceedsBaseline, OverlappingDisruptions
from .indices import IndexPair, adaptability_from_rates, classify
from .io import atomic_write, dump_json
from .series import MonthStamp, PerformanceSeries

DEFAULT_START = MonthStamp(2017, 1)


@dataclass(frozen=True)
class InjectedDisruption:
    params: BetaDisruptionParams
    decoy: bool = False


@dataclass(frozen=True)
class ScenarioSpec:
    horizon: int
    trend: dict = field(default_factory=lambda: {"kind": "linear", "intercept": 1.0, "slope": 0.0})
    seasonal_amplitude: float = 0.0
    noise_sd: float = 0.0
    disruptions: tuple = ()
    seed: int = 0
    start: MonthStamp = DEFAULT_START
    label: str = "synthetic"

    @classmethod
    def from_dict(cls, d):
        try:
            dis = tuple(
                InjectedDisruption(
                    BetaDisruptionParams(
                        alpha=float(x["alpha"]), theta=float(x["theta"]),
                        vartheta=float(x["vartheta"]), duration=float(x["duration"]),
                        start_index=float(x["start_index"]),
                    ),
                    bool(x.get("decoy", False)),
                )
                for x in d.get("disruptions", [])
            )
            spec = cls(
                horizon=int(d["horizon"]),
                trend=dict(d.get("trend", {"kind": "linear", "intercept": 1.0, "slope": 0.0})),
                seasonal_amplitude=float(d.get("seasonal_amplitude", 0.0)),
                noise_sd=float(d.get("noise_sd", 0.0)),
                disruptions=dis,
                seed=int(d.get("seed", 0)),
                start=MonthStamp.parse(d.get("start", str(DEFAULT_START))),
                label=str(d.get("label", "synthetic")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"invalid scenario spec: {exc}") from exc
        return spec

    def to_dict(self):
        return {
            "horizon": self.horizon,
            "trend": self.trend,
            "seasonal_amplitude": self.seasonal_amplitude,
            "noise_sd": self.noise_sd,
            "seed": self.seed,
            "start": str(self.start),
            "label": self.label,
            "disruptions": [dict(d.params.to_dict(), decoy=d.decoy) for d in self.disruptions],
        }


def trend_value(trend, t):
    t = np.asarray(t, dtype=float)
    kind = trend.get("kind")
    if kind == "linear":
        return trend.get("intercept", 1.0) + trend.get("slope", 0.0) * t
    if kind == "logistic":
        a, k = trend["A"], trend["K"]
        q, b, nu = trend["Q"], trend["B"], trend["nu"]
        return a + (k - a) / (1.0 + q * np.exp(-b * t)) ** (1.0 / nu)
    raise InvalidSpec(f"unknown trend kind {kind!r}")


def expected_value(spec, t):
    t = np.asarray(t, dtype=float)
    season = 1.0 + spec.seasonal_amplitude * np.sin(2.0 * math.pi * t / 12.0)
    return trend_value(spec.trend, t) * season


@dataclass(frozen=True)
class ScenarioTruth:
    spec: ScenarioSpec
    expected: PerformanceSeries
    observed: PerformanceSeries
    true_indices: IndexPair
    disruptions: tuple  # non-decoy BetaDisruptionParams, ordered
    span: tuple | None  # (first, last) month indices integrated for r

    def truth_dict(self):
        return {
            "spec": self.spec.to_dict(),
            "true_indices": self.true_indices.to_dict(),
            "span": None if self.span is None else list(self.span),
            "disruptions": [
                dict(p.to_dict(), u=p.rates().u, v=p.rates().v,
                     loss_integral=beta_loss_integral(p),
                     truncated=p.end_index > self.spec.horizon - 1)
                for p in self.disruptions
            ],
        }


def _validate(spec):
    if spec.horizon < 2:
        raise InvalidSpec("horizon must be at least 2 months")
    if spec.noise_sd < 0:
        raise InvalidSpec("noise_sd must be >= 0")
    ordered = sorted(spec.disruptions, key=lambda d: d.params.start_index)
    for d in ordered:
        if not 0 <= d.params.start_index < spec.horizon:
            raise InvalidSpec(f"disruption start {d.params.start_index} outside the horizon")
    for a, b in zip(ordered, ordered[1:]):
        if b.params.start_index < a.params.end_index:
            raise OverlappingDisruptions(
                f"disruption at {b.params.start_index} starts before the one at "
                f"{a.params.start_index} ends ({a.params.end_index})")
    for d in ordered:
        if d.decoy:
            continue
        p = d.params
        ratio = p.alpha / float(expected_value(spec, p.peak_time))
        if p.duration < 3 or ratio < 0.05:
            raise InvalidSpec(
                f"disruption at {p.start_index} is not admissible (T={p.duration}, "
                f"peak ratio {ratio:.4f}); mark it as a decoy")
    return ordered


def _area(p, a, b):
    """Area of one disruption's loss restricted to months [a, b]."""
    return beta_loss_integral(p, upto=b) - beta_loss_integral(p, upto=a)


def generate(spec):
    ordered = _validate(spec)
    t = np.arange(spec.horizon, dtype=float)
    expected = expected_value(spec, t)
    loss = np.zeros(spec.horizon)
    for d in ordered:
        loss += beta_loss(d.params, t)
    clean = expected - loss
    if np.any(clean < 0):
        raise LossExceedsBaseline(f"injected loss exceeds expected at month {int(np.argmin(clean))}")
    if spec.noise_sd > 0:
        rng = np.random.default_rng(spec.seed)
        eps = rng.normal(0.0, spec.noise_sd, spec.horizon)
        observed = np.clip(clean * (1.0 + eps), 0.0, None)
    else:
        observed = clean.copy()

    true = [d.params for d in ordered if not d.decoy]
    if not true:
        pair = IndexPair(1.0, 1.0, 0, no_disruptions=True, label=spec.label)
        span = None
    else:
        rho = adaptability_from_rates([p.rates().u for p in true])
        first = int(round(true[0].start_index))
        last = int(min(math.ceil(true[-1].end_index), spec.horizon - 1))
        lost = sum(_area(d.params, first, last) for d in ordered)
        total, _ = quad(lambda x: float(expected_value(spec, x)), first, last, limit=200)
        r = min(max(1.0 - lost / total, 0.0), 1.0)
        pair = IndexPair(rho, r, len(true), label=spec.label)
        span = (first, last)

    return ScenarioTruth(
        spec=spec,
        expected=PerformanceSeries(spec.start, expected, spec.label),
        observed=PerformanceSeries(spec.start, observed, spec.label),
        true_indices=classify(pair),
        disruptions=tuple(true),
        span=span,
    )


def _rel(est, true):
    return abs(est - true) / abs(true) if true else abs(est - true)


def evaluate_pipeline(truth, report):
    """Compare a pipeline report against the injected ground truth.

    ``report`` is an :class:`~rescurve.pipeline.ResilienceReport`. Fitted
    amplitudes are rescaled by the report's normalization factor before
    comparison. A disruption-count mismatch is reported as a metric and
    disruptions are then paired by nearest start month.
    """
    true = list(truth.disruptions)
    found = list(report.fitted)
    scale = report.scale
    metrics = {
        "count_true": len(true),
        "count_found": len(found),
        "count_match": len(true) == len(found),
        "disruptions": [],
        "rho_abs_error": abs(report.indices.adaptability - truth.true_indices.adaptability),
        "r_abs_error": abs(report.indices.resilience - truth.true_indices.resilience),
    }
    if len(true) == len(found):
        pairs = list(zip(true, found))
    else:
        pairs = []
        for f in found:
            if true:
                p = min(true, key=lambda q: abs(q.start_index - f.params.start_index))
                pairs.append((p, f))
    for p, f in pairs:
        fp = f.params
        w = f.window
        metrics["disruptions"].append({
            "alpha_abs": abs(fp.alpha * scale - p.alpha),
            "alpha_rel": _rel(fp.alpha * scale, p.alpha),
            "theta_rel": _rel(fp.theta, p.theta),
            "vartheta_rel": _rel(fp.vartheta, p.vartheta),
            "duration_rel": _rel(fp.duration, p.duration),
            "u_rel": _rel(f.rates.u, p.rates().u),
            "v_rel": _rel(f.rates.v, p.rates().v),
            "boundary_offset": (abs(w.start_index - p.start_index),
                                abs(w.end_index - p.end_index)),
        })
    return metrics


def write_scenario(truth, out_dir):
    """Write observed.csv, expected.csv and truth.json into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write(out_dir / "observed.csv", truth.observed.to_csv())
    atomic_write(out_dir / "expected.csv", truth.expected.to_csv())
    atomic_write(out_dir / "truth.json", dump_json(truth.truth_dict()))
