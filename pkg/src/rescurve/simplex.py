"""Bounded derivative-free simplex minimizer shared by the curve fitters.

Positivity is enforced by searching in log coordinates; box bounds are
enforced by projecting each trial point onto ``[lower, upper]`` before the
objective is evaluated. The simplex itself lives in the unconstrained log
space, so an active bound simply produces a flat objective beyond it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllStartsFailed

MAX_ITER = 500
RTOL = 1e-9


@dataclass(frozen=True)
class MinimizeResult:
    x: np.ndarray
    fun: float
    iterations: int
    converged: bool
    start_index: int


class _Bounded:
    def __init__(self, objective, lower, upper):
        self.objective = objective
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if np.any(self.lower < 0):
            raise ValueError("log-space search needs non-negative lower bounds")
        if np.any(self.upper <= self.lower):
            raise ValueError("upper bounds must exceed lower bounds")

    def to_x(self, z):
        return np.clip(np.exp(z), self.lower, self.upper)

    def to_z(self, x):
        with np.errstate(divide="ignore"):
            return np.log(np.clip(x, self.lower, self.upper))

    def __call__(self, z):
        try:
            f = float(self.objective(self.to_x(z)))
        except (FloatingPointError, ZeroDivisionError, OverflowError, ValueError):
            return np.inf
        return f if np.isfinite(f) else np.inf


def _nelder_mead(fz, z0, step, max_iter, rtol):
    dim = len(z0)
    simplex = np.empty((dim + 1, dim))
    simplex[0] = z0
    for i in range(dim):
        simplex[i + 1] = z0
        simplex[i + 1, i] += step
    fvals = np.array([fz(p) for p in simplex])

    cycle = dim + 1
    history = []
    it = 0
    converged = False
    while it < max_iter:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        best = fvals[0]
        history.append(best)
        if np.isfinite(best) and len(history) > cycle:
            old = history[-1 - cycle]
            improved = old - best
            spread = fvals[-1] - best
            tol = rtol * abs(old) + 1e-300
            if improved <= tol and spread <= rtol * abs(best) + 1e-300:
                converged = True
                break
            if best == 0.0:
                converged = True
                break
        it += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = fz(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = fz(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = fz(xc)
            if fc <= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = fz(xc)
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
                continue
        # shrink toward the best vertex
        simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
        fvals[1:] = [fz(p) for p in simplex[1:]]

    i = int(np.argmin(fvals))
    return simplex[i], float(fvals[i]), it, converged


def minimize(objective, lower, upper, starts, *, max_iter=MAX_ITER, rtol=RTOL, step=0.2):
    """Minimize ``objective`` from each start and keep the overall best.

    Parameters
    ----------
    objective : callable
        Maps a parameter vector to a non-negative real.
    lower, upper : array_like
        Box bounds; ``lower`` must be >= 0 (0 means unbounded toward zero).
    starts : sequence of array_like
        Initial vectors, each within the bounds.
    max_iter : int
        Simplex iterations allowed per start.
    rtol : float
        Stop a start once the best value improves by less than this
        relative amount over one full simplex cycle (dim + 1 iterations).
    step : float
        Edge length of the initial simplex in log coordinates.

    Returns
    -------
    MinimizeResult
        Ties between starts go to the earliest start.

    Raises
    ------
    AllStartsFailed
        If the objective is non-finite at every start.
    """
    fz = _Bounded(objective, lower, upper)
    best = None
    total_iter = 0
    for k, s in enumerate(starts):
        s = np.asarray(s, dtype=float)
        if np.any(s < fz.lower) or np.any(s > fz.upper):
            raise ValueError(f"start {k} lies outside the bounds")
        z0 = fz.to_z(s)
        # a start exactly on a zero lower bound has no finite log; nudge it
        z0 = np.where(np.isfinite(z0), z0, np.log(1e-12))
        if not np.isfinite(fz(z0)):
            continue
        z, f, it, conv = _nelder_mead(fz, z0, step, max_iter, rtol)
        total_iter += it
        if best is None or f < best.fun:
            best = MinimizeResult(fz.to_x(z), f, it, conv, k)
    if best is None:
        raise AllStartsFailed("objective is non-finite at every start")
    return MinimizeResult(best.x, best.fun, total_iter, best.converged, best.start_index)
