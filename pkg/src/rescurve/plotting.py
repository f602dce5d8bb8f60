"""SVG charts: one series with its baseline and disruption windows, and batch rankings."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .betafit import beta_loss  # noqa: E402

_SVG_META = {"Date": None, "Creator": None}


def _svg(fig):
    buf = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": "rescurve", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata=_SVG_META, bbox_inches="tight")
    plt.close(fig)
    return buf.getvalue()


def plot_analysis(result, title=None):
    """Observed and expected performance with shaded disruption windows.

    ``result`` is an :class:`~rescurve.pipeline.AnalysisResult`. Fitted
    curves are drawn as expected minus the modelled loss. Returns SVG text.
    """
    rep = result.report
    obs = np.asarray(result.observed.values, dtype=float)
    exp_ = np.asarray(result.forecast.values, dtype=float)
    t = np.arange(len(obs))

    fig, ax = plt.subplots(figsize=(8, 3.6))
    ax.plot(t, exp_, color="0.35", lw=1.4, ls="--", label="expected P(t)")
    ax.plot(t, obs, color="tab:blue", lw=1.6, label="observed O(t)")
    for k, w in enumerate(rep.windows):
        ax.axvspan(w.start_index, min(w.end_index, len(obs) - 1), color="tab:red",
                   alpha=0.12, lw=0, label="disruption window" if k == 0 else None)
    for k, f in enumerate(rep.fitted):
        hi = min(f.params.end_index, len(obs) - 1)
        fine = np.linspace(f.params.start_index, hi, 200)
        ax.plot(fine, np.interp(fine, t, exp_) - beta_loss(f.params, fine), color="tab:red",
                lw=1.0, label="fitted curve" if k == 0 else None)
    if rep.cutoff is not None:
        ax.axvline(result.observed.index_of(rep.cutoff), color="0.6", lw=0.8, ls=":")

    step = max(1, len(obs) // 8)
    ticks = t[::step]
    ax.set_xticks(ticks)
    ax.set_xticklabels([str(rep.start.shift(int(i))) for i in ticks], rotation=30, ha="right")
    ax.set_ylabel("performance (normalized)" if rep.options.normalize else "performance")
    idx = rep.indices
    rho = "n/a" if np.isnan(idx.adaptability) else f"{idx.adaptability:.2f}"
    ax.set_title(title or f"{rep.label}: rho = {rho}, r = {idx.resilience:.3f}")
    ax.legend(loc="lower left", fontsize=8, frameon=False)
    ax.grid(alpha=0.25)
    return _svg(fig)


def plot_rankings(rows, title="Resilience ranking"):
    """Horizontal bars of r per label, highest first.

    ``rows`` are dicts with ``label``, ``r`` and ``rho`` keys. Returns SVG text.
    """
    rows = sorted(rows, key=lambda d: (-d["r"], d["label"]))
    labels = [d["label"] for d in rows]
    fig, ax = plt.subplots(figsize=(6, 0.3 * len(rows) + 1.2))
    y = np.arange(len(rows))
    colors = ["tab:green" if d.get("rho") is not None and d["rho"] > 0.5 else "tab:gray"
              for d in rows]
    ax.barh(y, [d["r"] for d in rows], color=colors)
    ax.set_yticks(y)
    ax.set_yticklabels(labels, fontsize=8)
    ax.invert_yaxis()
    ax.axvline(0.7, color="k", lw=0.8, ls="--")
    ax.set_xlim(0, 1)
    ax.set_xlabel("resilience r (green: rho > 0.5)")
    ax.set_title(title)
    return _svg(fig)
