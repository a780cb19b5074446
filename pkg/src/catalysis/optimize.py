"""Nelder-Mead simplex minimisation in an unconstrained space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .transforms import BoxTransform


@dataclass(frozen=True)
class NMOptions:
    fatol: float = 1e-8
    maxiter: int = 2000
    #: initial simplex offset, relative to |x_i| (absolute ``zero_step`` when x_i = 0)
    rel_step: float = 0.05
    zero_step: float = 0.00025
    #: also require every vertex within ``xatol`` of the best (None disables);
    #: guards against a simplex straddling a minimum with equal values
    xatol: float | None = 1e-6


@dataclass
class NMResult:
    x: np.ndarray
    fun: float
    nit: int
    nfev: int
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    options: NMOptions = NMOptions(),
) -> NMResult:
    """Standard Nelder-Mead (reflection 1, expansion 2, contraction 0.5, shrink 0.5).

    Stops once ``max f - min f`` over the simplex is at most ``fatol`` and the
    simplex has shrunk below ``xatol``, or after ``maxiter`` iterations.
    Non-finite values count as ``+inf``.  ``history`` holds the best value after each iteration.
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    nfev = 0

    def F(x):
        nonlocal nfev
        nfev += 1
        v = float(f(x))
        return v if math.isfinite(v) else math.inf

    f0 = F(x0)
    if not math.isfinite(f0):
        raise ValueError("objective is not finite at the start point")
    if n == 0:
        return NMResult(x0, f0, 0, nfev, True, [f0])

    sim = np.empty((n + 1, n))
    sim[0] = x0
    for i in range(n):
        y = x0.copy()
        y[i] = y[i] * (1 + options.rel_step) if y[i] != 0 else options.zero_step
        sim[i + 1] = y
    fs = np.array([f0] + [F(v) for v in sim[1:]])

    history = []
    converged = False
    nit = 0
    while nit < options.maxiter:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        history.append(float(fs[0]))
        spread_ok = fs[-1] - fs[0] <= options.fatol
        if spread_ok and options.xatol is not None:
            spread_ok = np.max(np.abs(sim[1:] - sim[0])) <= options.xatol
        if spread_ok:
            converged = True
            break
        nit += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + (centroid - sim[-1])
        fr = F(xr)
        if fr < fs[0]:
            xe = centroid + 2.0 * (centroid - sim[-1])
            fe = F(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
            continue
        if fr < fs[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = F(xc)
            if fc <= fr:
                sim[-1], fs[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (sim[-1] - centroid)
            fc = F(xc)
            if fc < fs[-1]:
                sim[-1], fs[-1] = xc, fc
                continue
        sim[1:] = sim[0] + 0.5 * (sim[1:] - sim[0])
        fs[1:] = [F(v) for v in sim[1:]]
    else:
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        history.append(float(fs[0]))
    return NMResult(sim[0].copy(), float(fs[0]), nit, nfev, converged, history)


def nelder_mead_constrained(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence[tuple[float | None, float | None]] | BoxTransform,
    start: Sequence[float],
    options: NMOptions = NMOptions(),
) -> tuple[np.ndarray, float]:
    """Minimise ``objective`` over a box by running Nelder-Mead on transformed coordinates.

    The returned point always lies within the bounds.
    """
    tr = bounds if isinstance(bounds, BoxTransform) else BoxTransform.from_bounds(bounds)
    start = np.asarray(start, dtype=float)
    if not tr.contains(start):
        raise ValueError(f"start {start} is outside the bounds")
    res = nelder_mead(lambda z: objective(tr.from_free(z)), tr.to_free(start), options)
    return tr.from_free(res.x), res.fun
