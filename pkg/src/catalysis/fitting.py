"""Bernoulli likelihood of collaboration outcomes and multistart Nelder-Mead fits.

``fit`` screens every grid point with one likelihood evaluation and runs
Nelder-Mead from the ``n_refine`` best of them (plus any explicit warm starts).
Each start is independent, so running them in worker processes gives the same
result as running them in order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .conference import Conference
from .dynamics import IntegrationError
from .interaction import PairTable, pair_table
from .models import CandidateModel, ModelKind, get_model
from .optimize import NMOptions, nelder_mead
from .potential import DomainError

DEFAULT_REFINE = 4
MAX_SCREEN = 10_000


class FitError(RuntimeError):
    pass


@dataclass
class FitResult:
    model: str
    params: np.ndarray
    nll: float
    n_pairs: int
    k_params: int
    converged: bool
    starts_evaluated: int
    best_start_index: int
    n_clipped: int = 0
    iterations: int = 0
    history: list[float] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        m = get_model(self.model)
        return {
            "model": self.model,
            "params": m.as_dict(self.params),
            "nll": self.nll,
            "n_pairs": self.n_pairs,
            "k_params": self.k_params,
            "converged": self.converged,
            "starts_evaluated": self.starts_evaluated,
            "best_start_index": self.best_start_index,
            "n_clipped": self.n_clipped,
            "iterations": self.iterations,
        }


def _as_table(data: Conference | PairTable) -> PairTable:
    return data if isinstance(data, PairTable) else pair_table(data)


def bernoulli_nll(p: np.ndarray, y: np.ndarray) -> float:
    """``-sum(y ln p + (1-y) ln(1-p))``, summed with ``math.fsum`` (order-free)."""
    p = np.asarray(p, dtype=float)
    y = np.asarray(y, dtype=bool)
    terms = np.where(y, -np.log(p), -np.log1p(-p))
    return math.fsum(terms.tolist())


def negative_log_likelihood(model, params, data: Conference | PairTable, strict: bool = False) -> float:
    """Negative log-likelihood of the observed outcomes of every eligible pair."""
    m = get_model(model)
    table = _as_table(data)
    return bernoulli_nll(m.predict(params, table, strict=strict), table.y)


def _safe_nll(m: CandidateModel, x: np.ndarray, table: PairTable) -> float:
    # the search excludes step-unstable parameter sets (see dynamics strict mode)
    try:
        return negative_log_likelihood(m, x, table, strict=True)
    except (ValueError, DomainError, IntegrationError, FloatingPointError):
        return math.inf


def _refine(args):
    m, table, start, options = args
    z0 = m.to_free(start)
    res = nelder_mead(lambda z: _safe_nll(m, m.from_free(z), table), z0, options)
    return m.from_free(res.x), res


def fit(
    model,
    data: Conference | PairTable,
    grid: Sequence[Sequence[float]] | None = None,
    seed: int = 0,
    n_refine: int = DEFAULT_REFINE,
    options: NMOptions = NMOptions(),
    extra_starts: Sequence[Sequence[float]] = (),
    workers: int = 1,
    max_screen: int = MAX_SCREEN,
) -> FitResult:
    """Maximum-likelihood fit of ``model``.

    ``extra_starts`` are always refined (used for nested warm starts).  When the
    grid exceeds ``max_screen`` points a seeded subsample is screened.
    """
    m = get_model(model)
    table = _as_table(data)
    starts = [np.asarray(g, dtype=float) for g in (m.default_grid(table) if grid is None else grid)]
    extra = [np.asarray(g, dtype=float) for g in extra_starts]
    if not starts and not extra and m.k_params:
        raise ValueError("empty start grid")

    if m.kind is ModelKind.RANDOM_UNIFORM:
        nll = negative_log_likelihood(m, [], table)
        return FitResult(m.name, np.zeros(0), nll, len(table), 0, True, 1, 0)

    if len(starts) > max_screen:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(len(starts), size=max_screen, replace=False))
        starts = [starts[i] for i in keep]

    all_starts = starts + extra
    screened = np.array([_safe_nll(m, s, table) for s in all_starts])
    finite = np.flatnonzero(np.isfinite(screened))
    if len(finite) == 0:
        raise FitError(f"{m.name}: likelihood not finite at any start point")
    grid_idx = [i for i in finite[np.argsort(screened[finite], kind="stable")] if i < len(starts)]
    chosen = grid_idx[:n_refine] + [i for i in range(len(starts), len(all_starts)) if np.isfinite(screened[i])]

    jobs = [(m, table, all_starts[i], options) for i in chosen]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            outcomes = list(ex.map(_refine, jobs))
    else:
        outcomes = [_refine(j) for j in jobs]

    best = None
    for i, (x, res) in zip(chosen, outcomes):
        if not math.isfinite(res.fun):
            continue
        if best is None or res.fun < best[2].fun:
            best = (i, x, res)
    if best is None:
        raise FitError(f"{m.name}: every start failed")
    i, x, res = best
    # report the likelihood of the returned (natural-space) point itself
    nll = negative_log_likelihood(m, x, table)
    return FitResult(
        m.name, x, nll, len(table), m.k_params, res.converged, len(all_starts), int(i),
        m.clip_count(x, table), res.nit, res.history,
    )
