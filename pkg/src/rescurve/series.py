"""Monthly performance series: parsing, smoothing, normalization, splitting."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import total_ordering

import numpy as np

from .errors import (
    CutoffOutOfRange,
    DuplicateMonth,
    MalformedRow,
    MissingMonth,
    NegativeValue,
    WindowTooLarge,
    ZeroOrigin,
)


@total_ordering
@dataclass(frozen=True)
class MonthStamp:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month must be in 1..12, got {self.month}")

    @classmethod
    def parse(cls, text):
        text = text.strip()
        parts = text.split("-")
        if len(parts) != 2 or len(parts[0]) != 4 or len(parts[1]) != 2:
            raise ValueError(f"expected YYYY-MM, got {text!r}")
        return cls(int(parts[0]), int(parts[1]))

    @property
    def ordinal(self):
        return self.year * 12 + (self.month - 1)

    @classmethod
    def from_ordinal(cls, n):
        return cls(n // 12, n % 12 + 1)

    def shift(self, months):
        return MonthStamp.from_ordinal(self.ordinal + months)

    def __sub__(self, other):
        return self.ordinal - other.ordinal

    def __lt__(self, other):
        return (self.year, self.month) < (other.year, other.month)

    def __str__(self):
        return f"{self.year:04d}-{self.month:02d}"


@dataclass(frozen=True)
class PerformanceSeries:
    """Gap-free monthly observations; ``values[i]`` belongs to ``start + i``."""

    start: MonthStamp
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if np.any(~np.isfinite(arr)):
            raise ValueError("values must be finite")
        if np.any(arr < 0):
            raise NegativeValue("values must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return len(self.values)

    @property
    def end(self):
        """Last month covered (inclusive)."""
        return self.start.shift(len(self) - 1)

    def months(self):
        return [self.start.shift(i) for i in range(len(self))]

    def calendar_months(self):
        """Calendar month (1..12) of each observation, as an int array."""
        return (self.start.ordinal + np.arange(len(self))) % 12 + 1

    def index_of(self, month):
        return month - self.start

    def replace(self, values=None, start=None, label=None):
        return PerformanceSeries(
            start=self.start if start is None else start,
            values=self.values if values is None else values,
            label=self.label if label is None else label,
        )

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["month", "value", "label"])
        for m, v in zip(self.months(), self.values):
            writer.writerow([str(m), repr(float(v)), self.label])
        return buf.getvalue()


def _data_rows(text):
    """Yield (row_number, fields) skipping blank and ``#`` comment lines."""
    reader = csv.reader(io.StringIO(text))
    for lineno, fields in enumerate(reader, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        if fields[0].lstrip().startswith("#"):
            continue
        yield lineno, [f.strip() for f in fields]


def parse_series(text, label=None):
    """Parse ``month,value[,label]`` CSV text into a :class:`PerformanceSeries`.

    Rows may appear in any order; they are sorted by month before the gap
    check. Row numbers in errors count physical lines, header = 1.
    """
    if text.startswith("﻿"):
        text = text[1:]
    rows = _data_rows(text)
    try:
        header_row, header = next(rows)
    except StopIteration:
        raise MalformedRow("empty input", row=1) from None
    header = [h.lower() for h in header]
    if header[:2] != ["month", "value"] or len(header) > 3 or (
        len(header) == 3 and header[2] != "label"
    ):
        raise MalformedRow(f"expected header month,value[,label], got {','.join(header)}",
                           row=header_row)

    seen = {}
    labels = set()
    for lineno, fields in rows:
        if len(fields) < 2 or len(fields) > len(header):
            raise MalformedRow(f"expected {len(header)} fields, got {len(fields)}", row=lineno)
        try:
            month = MonthStamp.parse(fields[0])
        except ValueError as exc:
            raise MalformedRow(str(exc), row=lineno) from None
        try:
            value = float(fields[1])
        except ValueError:
            raise MalformedRow(f"not a number: {fields[1]!r}", row=lineno) from None
        if not np.isfinite(value):
            raise MalformedRow(f"not a finite number: {fields[1]!r}", row=lineno)
        if value < 0:
            raise NegativeValue(f"negative value {value}", row=lineno)
        if month in seen:
            raise DuplicateMonth(f"duplicate month {month}", row=lineno)
        seen[month] = (lineno, value)
        if len(fields) == 3 and fields[2]:
            labels.add(fields[2])

    if not seen:
        raise MalformedRow("no data rows", row=header_row + 1)

    ordered = sorted(seen)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur - prev != 1:
            raise MissingMonth(f"gap between {prev} and {cur}", row=seen[cur][0])

    if label is None:
        label = labels.pop() if len(labels) == 1 else ""
    return PerformanceSeries(
        start=ordered[0],
        values=np.array([seen[m][1] for m in ordered]),
        label=label,
    )


def moving_average(series, window):
    """Trailing mean over ``window`` months, shortened at the left edge."""
    n = len(series)
    if window < 1:
        raise ValueError("window must be >= 1")
    if window > n:
        raise WindowTooLarge(f"window {window} exceeds series length {n}")
    if window == 1:
        return series
    v = series.values
    out = np.array([v[max(0, i - window + 1): i + 1].mean() for i in range(n)])
    return series.replace(values=out)


def normalize_at_origin(series):
    v0 = series.values[0]
    if v0 <= 0:
        raise ZeroOrigin("first value is zero; cannot normalize")
    out = series.values / v0
    out[0] = 1.0
    return series.replace(values=out)


def split_at(series, cutoff):
    """Split into months before ``cutoff`` and months from ``cutoff`` on."""
    k = series.index_of(cutoff)
    if k <= 0 or k >= len(series):
        raise CutoffOutOfRange(
            f"cutoff {cutoff} must lie strictly inside {series.start}..{series.end}"
        )
    pre = series.replace(values=series.values[:k])
    post = series.replace(values=series.values[k:], start=cutoff)
    return pre, post


def concat(first, second):
    if second.start - first.start != len(first):
        raise ValueError("series are not contiguous")
    return first.replace(values=np.concatenate([first.values, second.values]))
