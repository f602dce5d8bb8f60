"""End-to-end analysis of one performance series.

smooth -> normalize -> split -> baseline fit -> forecast -> detect -> fit
-> indices, collected into a :class:`ResilienceReport`.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

from . import __version__
from .baseline import ALIASES, BaselineForecast, fit_baseline, forecast
from .betafit import fit_disruption
from .detect import detect, residuals
from .errors import AlignmentMismatch, CutoffOutOfRange, FitError, SeriesTooShort
from .indices import DisruptionProfile, compute_indices
from .series import moving_average, normalize_at_origin, split_at

SCHEMA_VERSION = "1"
MIN_SERIES_LENGTH = 24
BASELINE_CHOICES = ("covariate", "logistic", "ets", "given")


@dataclass(frozen=True)
class AnalysisOptions:
    window: int = 3
    normalize: bool = True
    min_duration: int = 3
    min_peak_ratio: float = 0.05
    penalty: float | None = None
    span: str = "contiguous"
    baseline: str | None = None  # None: covariate if covariates are given, else logistic
    rho_basis: str = "disruption"
    quadrature: str = "corrected"
    floor_sigmas: float = 2.0
    edge_slack: int = 1

    def to_dict(self):
        return {
            "window": self.window,
            "normalize": self.normalize,
            "min_duration": self.min_duration,
            "min_peak_ratio": self.min_peak_ratio,
            "penalty": "auto" if self.penalty is None else self.penalty,
            "span": self.span,
            "baseline": self.baseline,
            "rho_basis": self.rho_basis,
            "quadrature": self.quadrature,
            "floor_sigmas": self.floor_sigmas,
            "edge_slack": self.edge_slack,
        }


@dataclass
class ResilienceReport:
    label: str
    start: object  # MonthStamp of index 0
    options: AnalysisOptions
    baseline_kind: str
    model: dict | None
    scale: float
    penalty: float
    windows: list
    fitted: list
    failures: list
    indices: object  # IndexPair
    cutoff: object = None
    inputs: dict = field(default_factory=dict)

    @property
    def unrecovered(self):
        return sum(1 for f in self.fitted if not f.recovery_reliable)

    @property
    def exit_code(self):
        return 2 if self.failures else 0

    def to_dict(self, timestamp=True):
        d = {
            "schema_version": SCHEMA_VERSION,
            "tool_version": __version__,
            "label": self.label,
            "series_start": str(self.start),
            "cutoff": None if self.cutoff is None else str(self.cutoff),
            "settings": self.options.to_dict(),
            "baseline": {"kind": self.baseline_kind, "model": self.model},
            "normalization_scale": self.scale,
            "penalty": self.penalty,
            "windows": [w.to_dict(self.start) for w in self.windows],
            "disruptions": [f.to_dict(self.start.shift(f.window.start_index))
                            for f in self.fitted],
            "fit_failures": self.failures,
            "indices": self.indices.to_dict(),
            "flags": {
                "unrecovered": self.unrecovered,
                "no_disruptions": self.indices.no_disruptions,
                "fit_failures": len(self.failures),
            },
            "inputs": dict(sorted(self.inputs.items())),
        }
        if timestamp:
            d["metadata"] = {
                "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            }
        return d


@dataclass
class AnalysisResult:
    report: ResilienceReport
    observed: object  # processed PerformanceSeries
    forecast: BaselineForecast
    residuals: object
    segments: list


def _resolve_kind(options, cov, expected):
    if expected is not None:
        return "given"
    kind = options.baseline
    if kind is None or kind == "auto":
        kind = "covariate" if cov is not None else "logistic"
    if kind == "given":
        raise ValueError("baseline 'given' needs an expected series")
    return ALIASES.get(kind, kind)


def analyze(observed, *, cutoff=None, cov=None, expected=None, options=None, inputs=None):
    """Run the full pipeline on one observed series.

    Either ``expected`` (a known counterfactual, same months as
    ``observed``) or ``cutoff`` (first disrupted month; the baseline is
    fitted on the months before it) must be given. Detection only looks at
    months from ``cutoff`` on when a cutoff is supplied.
    """
    options = options or AnalysisOptions()
    kind = _resolve_kind(options, cov, expected)
    if expected is None and cutoff is None:
        raise CutoffOutOfRange("a cutoff month is required when the baseline is fitted")
    if kind != "given" and len(observed) < MIN_SERIES_LENGTH:
        raise SeriesTooShort(f"series has {len(observed)} months; need {MIN_SERIES_LENGTH}")

    smooth = moving_average(observed, options.window)
    scale = float(smooth.values[0]) if options.normalize else 1.0
    obs = normalize_at_origin(smooth) if options.normalize else smooth

    model_dict = None
    if kind == "given":
        if expected.start != observed.start or len(expected) != len(observed):
            raise AlignmentMismatch("expected series must cover the same months as observed")
        exp_s = moving_average(expected, options.window)
        fc = BaselineForecast(obs.start, exp_s.values / scale)
    else:
        pre, _ = split_at(obs, cutoff)
        model = fit_baseline(kind, pre, cov)
        fc = forecast(model, cov, len(obs))
        model_dict = model.to_dict()

    res = residuals(obs, fc)
    first = 0 if cutoff is None else obs.index_of(cutoff)
    if not 0 <= first < len(obs):
        raise CutoffOutOfRange(f"cutoff {cutoff} outside {obs.start}..{obs.end}")
    windows, segments, penalty = detect(
        res, options.penalty, options.min_duration, options.min_peak_ratio, first_index=first,
        floor_sigmas=options.floor_sigmas)

    fitted, failures = [], []
    for k, w in enumerate(windows):
        lo = windows[k - 1].end_index if k else first
        hi = windows[k + 1].start_index if k + 1 < len(windows) else len(obs) - 1
        try:
            fitted.append(fit_disruption(w, obs, fc, options.edge_slack, lo, hi,
                                         options.min_duration))
        except FitError as exc:
            failures.append({"start_month": str(obs.start.shift(w.start_index)),
                             "error": type(exc).__name__, "message": str(exc)})

    profile = DisruptionProfile(observed.label, tuple(fitted), len(obs))
    pair = compute_indices(obs, fc, profile, span=options.span, basis=options.rho_basis,
                          quadrature=options.quadrature)

    report = ResilienceReport(
        label=observed.label,
        start=obs.start,
        options=options,
        baseline_kind=kind,
        model=model_dict,
        scale=scale,
        penalty=float(penalty),
        windows=list(windows),
        fitted=fitted,
        failures=failures,
        indices=pair,
        cutoff=cutoff,
        inputs=dict(inputs or {}),
    )
    return AnalysisResult(report, obs, fc, res, segments)


def baseline_sensitivity(observed, cutoff, cov=None, options=None,
                         kinds=("covariate", "logistic", "ets")):
    """Indices under each baseline kind, as a list of table rows."""
    options = options or AnalysisOptions()
    rows = []
    for kind in kinds:
        if kind == "covariate" and cov is None:
            continue
        opts = AnalysisOptions(**{**options.__dict__, "baseline": kind})
        rep = analyze(observed, cutoff=cutoff, cov=cov, options=opts).report
        rows.append({
            "baseline": kind,
            "rho": rep.indices.adaptability,
            "r": rep.indices.resilience,
            "n_disruptions": rep.indices.n_disruptions,
        })
    rs = [row["r"] for row in rows]
    spread = float(max(rs) - min(rs)) if rs else 0.0
    return rows, spread


def disruptions_table(report):
    """Rows for the per-disruption CSV written next to report.json."""
    header = ["label", "index", "start_month", "end_month", "peak_month", "duration_months",
              "recovery_observed", "alpha", "theta", "vartheta", "u", "v", "sse"]
    rows = []
    for i, f in enumerate(report.fitted, 1):
        w = f.window
        rows.append([
            report.label, i, str(report.start.shift(w.start_index)),
            str(report.start.shift(w.end_index)), str(report.start.shift(w.peak_index)),
            f.params.duration, w.recovery_observed, f.params.alpha, f.params.theta,
            f.params.vartheta, f.rates.u, f.rates.v, f.sse,
        ])
    return header, rows

