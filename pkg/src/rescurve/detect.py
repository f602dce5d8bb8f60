"""Disruption detection on the loss between expected and observed performance.

Relative loss is partitioned into constant-mean segments by an exact
penalized least-squares dynamic program; runs of positive-mean segments
mark candidate disruptions, whose boundaries are then placed at the months
where the loss leaves and returns to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentMismatch


@dataclass(frozen=True)
class ResidualSeries:
    start: object  # MonthStamp
    loss: np.ndarray
    relative_loss: np.ndarray

    def __len__(self):
        return len(self.loss)

    def tail(self, first):
        return ResidualSeries(self.start.shift(first), self.loss[first:],
                              self.relative_loss[first:])


@dataclass(frozen=True)
class Segment:
    first: int
    last: int  # inclusive
    mean_loss: float
    sse: float

    def __len__(self):
        return self.last - self.first + 1


@dataclass(frozen=True)
class DisruptionWindow:
    """A detected disruption occupying months ``[start_index, end_index)``.

    ``start_index`` is the last month still on target before the loss
    appears (the curve's anchor t_s) and ``end_index`` the first month back
    on target (t_r), or the series length when recovery was not observed.
    """

    start_index: int
    end_index: int
    peak_index: int
    recovery_observed: bool
    peak_relative_loss: float
    phase_split_index: int | None = None

    @property
    def duration(self):
        return self.end_index - self.start_index

    def shifted(self, offset):
        split = None if self.phase_split_index is None else self.phase_split_index + offset
        return DisruptionWindow(self.start_index + offset, self.end_index + offset,
                                self.peak_index + offset, self.recovery_observed,
                                self.peak_relative_loss, split)

    def to_dict(self, origin=None):
        d = {
            "start_index": self.start_index,
            "end_index": self.end_index,
            "peak_index": self.peak_index,
            "recovery_observed": self.recovery_observed,
            "peak_relative_loss": self.peak_relative_loss,
            "duration_months": self.duration,
            "phase_split_index": self.phase_split_index,
        }
        if origin is not None:
            d["start_month"] = str(origin.shift(self.start_index))
            d["end_month"] = str(origin.shift(self.end_index))
            d["peak_month"] = str(origin.shift(self.peak_index))
        return d


def residuals(observed, forecast):
    """Loss P - O and relative loss (P - O) / P, month by month."""
    obs = np.asarray(observed.values, dtype=float)
    exp_ = np.asarray(forecast.values, dtype=float)
    if len(obs) != len(exp_) or observed.start != forecast.start:
        raise AlignmentMismatch(
            f"observed {observed.start}+{len(obs)} vs forecast {forecast.start}+{len(exp_)}"
        )
    if np.any(exp_ <= 0):
        raise AlignmentMismatch("forecast must be strictly positive")
    loss = exp_ - obs
    return ResidualSeries(observed.start, loss, loss / exp_)


def default_penalty(relative_loss):
    """2 * (median |month-over-month change|)**2 * length."""
    x = np.asarray(relative_loss, dtype=float)
    if len(x) < 2:
        return 0.0
    mad = float(np.median(np.abs(np.diff(x))))
    return 2.0 * mad * mad * len(x)


def _cost_matrix(x):
    """cost[i, j] = SSE of x[i:j+1] about its mean (upper triangle)."""
    n = len(x)
    xc = x - x.mean()
    s1 = np.concatenate([[0.0], np.cumsum(xc)])
    s2 = np.concatenate([[0.0], np.cumsum(xc * xc)])
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    length = (j - i + 1).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        seg1 = s1[j + 1] - s1[i]
        cost = (s2[j + 1] - s2[i]) - seg1 * seg1 / length
    cost = np.where(j >= i, np.maximum(cost, 0.0), np.inf)
    return cost


def segment(series, penalty):
    """Exact penalized segmented least squares.

    Minimizes the total within-segment SSE plus ``penalty`` per segment.
    Among optimal partitions the one with fewer segments wins, then the one
    whose last boundary is earliest (applied recursively to the prefix).

    ``series`` may be a :class:`ResidualSeries` (its relative loss is used)
    or a plain sequence.
    """
    x = np.asarray(getattr(series, "relative_loss", series), dtype=float)
    n = len(x)
    if n < 1:
        return []
    if penalty < 0:
        raise ValueError("penalty must be >= 0")
    cost = _cost_matrix(x)
    tol = 1e-12 * (1.0 + float(np.sum(x * x)) + penalty)

    best = np.full(n + 1, np.inf)
    count = np.zeros(n + 1, dtype=int)
    back = np.zeros(n + 1, dtype=int)
    best[0] = 0.0
    for j in range(1, n + 1):
        for i in range(j):
            c = best[i] + cost[i, j - 1] + penalty
            k = count[i] + 1
            if c < best[j] - tol or (abs(c - best[j]) <= tol and k < count[j]):
                best[j], count[j], back[j] = c, k, i
            # equal cost and count: keep the earlier boundary (already stored)

    bounds = []
    j = n
    while j > 0:
        i = back[j]
        bounds.append((i, j - 1))
        j = i
    bounds.reverse()
    out = []
    for a, b in bounds:
        seg = x[a: b + 1]
        m = float(seg.mean())
        out.append(Segment(a, b, m, float(np.sum((seg - m) ** 2))))
    return out


def segmentation_cost(segments, penalty):
    return sum(s.sse for s in segments) + penalty * len(segments)


def noise_level(residuals, segments, quiet_below=0.025):
    """Robust noise scale of the relative loss.

    Only negative months inside segments whose mean is below
    ``quiet_below`` are used: a disruption never produces negative loss, so
    these months reflect noise alone. For a symmetric noise law
    1.4826 * median(|x|) over that half recovers the standard deviation.
    Zero when no such month exists, as with noise-free input.
    """
    rel = np.asarray(residuals.relative_loss, dtype=float)
    quiet = [rel[s.first: s.last + 1] for s in segments if s.mean_loss < quiet_below]
    if not quiet:
        return 0.0
    x = np.concatenate(quiet)
    x = x[x < 0]
    if len(x) == 0:
        return 0.0
    return 1.4826 * float(np.median(-x))


def extract_windows(residuals, segments, min_duration=3, min_peak_ratio=0.05, noise_floor=0.0):
    """Turn a segmentation into admissible disruption windows.

    A month is off target when its relative loss exceeds ``noise_floor``
    (zero by default, i.e. any loss). A candidate is a maximal stretch of
    off-target months that overlaps a run of positive-mean segments, or
    that reaches ``min_peak_ratio`` on its own. Candidates shorter than
    ``min_duration`` months or peaking below ``min_peak_ratio`` are
    discarded.
    """
    rel = np.asarray(residuals.relative_loss, dtype=float)
    n = len(rel)
    in_run = np.zeros(n, dtype=bool)
    for s in segments:
        if s.mean_loss > 0:
            in_run[s.first: s.last + 1] = True
    seg_starts = [s.first for s in segments[1:]]

    windows = []
    i = 0
    while i < n:
        if rel[i] <= noise_floor:
            i += 1
            continue
        j = i
        while j + 1 < n and rel[j + 1] > noise_floor:
            j += 1
        stretch = rel[i: j + 1]
        peak = i + int(np.argmax(stretch))
        peak_ratio = float(rel[peak])
        if in_run[i: j + 1].any() or peak_ratio >= min_peak_ratio:
            start = max(i - 1, 0)
            recovered = j + 1 < n
            end = j + 1 if recovered else n
            split = None
            inner = [b for b in seg_starts if start < b < end]
            if inner:
                split = min(inner, key=lambda b: (abs(b - peak), b))
            w = DisruptionWindow(int(start), int(end), int(peak), recovered, peak_ratio,
                                 None if split is None else int(split))
            if w.duration >= min_duration and peak_ratio >= min_peak_ratio:
                windows.append(w)
        i = j + 1
    return windows


def detect(residuals, penalty=None, min_duration=3, min_peak_ratio=0.05, first_index=0,
           floor_sigmas=2.0):
    """Segment and extract windows from month ``first_index`` onward.

    Window edges are placed where relative loss crosses ``floor_sigmas``
    times the estimated noise level (capped at half ``min_peak_ratio``);
    with noise-free input the floor is zero. Returned window indices refer
    to the full residual series.
    """
    part = residuals.tail(first_index) if first_index else residuals
    if penalty is None:
        penalty = default_penalty(part.relative_loss)
    segs = segment(part, penalty)
    cap = 0.5 * min_peak_ratio
    floor = min(floor_sigmas * noise_level(part, segs, cap), cap)
    wins = extract_windows(part, segs, min_duration, min_peak_ratio, floor)
    if first_index:
        wins = [w.shifted(first_index) for w in wins]
        segs = [Segment(s.first + first_index, s.last + first_index, s.mean_loss, s.sse)
                for s in segs]
    return wins, segs, penalty
