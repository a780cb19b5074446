"""AIC comparison of candidate models and cumulative-collaboration curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .conference import Conference
from .fitting import FitResult, _as_table, fit
from .interaction import PairTable, total_interaction_axis
from .models import ALL_MODELS, CandidateModel, ModelKind, get_model
from .optimize import NMOptions

DEFAULT_BINS = 85


def aic(nll: float, k_params: int) -> float:
    return 2.0 * k_params + 2.0 * nll


def relative_likelihood(aic_value: float, aic_min: float) -> float:
    return math.exp((aic_min - aic_value) / 2.0)


@dataclass
class SelectionRow:
    model: str
    k_params: int
    nll: float
    aic: float
    delta_aic: float = math.nan
    relative_likelihood: float = math.nan
    error: str | None = None
    fit: FitResult | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "model": self.model, "k_params": self.k_params, "nll": self.nll, "aic": self.aic,
            "delta_aic": self.delta_aic, "relative_likelihood": self.relative_likelihood,
            "error": self.error or "",
        }


def rank_rows(rows: list[SelectionRow]) -> list[SelectionRow]:
    """Fill delta AIC and relative likelihood; sort by AIC (failed rows last)."""
    ok = [r for r in rows if r.error is None and math.isfinite(r.aic)]
    if ok:
        best = min(r.aic for r in ok)
        for r in ok:
            r.delta_aic = r.aic - best
            r.relative_likelihood = relative_likelihood(r.aic, best)
    order = {k: i for i, k in enumerate(m.value for m in ALL_MODELS)}
    return sorted(rows, key=lambda r: (r.error is not None, r.aic if r.error is None else math.inf,
                                       order.get(r.model, 99)))


def _warm_starts(kind: ModelKind, fits: dict[ModelKind, FitResult]) -> list[np.ndarray]:
    """Starts that embed already-fitted nested models, so nesting holds for the fit."""
    out = []
    c = fits.get(ModelKind.CONSTANT_P)
    if kind in (ModelKind.LINEAR_K0, ModelKind.LINEAR_ITOT) and c is not None:
        out.append(np.array([0.0, c.params[0]]))
    if kind is ModelKind.LINEAR_K0_ITOT:
        if c is not None:
            out.append(np.array([0.0, 0.0, c.params[0]]))
        f = fits.get(ModelKind.LINEAR_K0)
        if f is not None:
            out.append(np.array([f.params[0], 0.0, f.params[1]]))
        f = fits.get(ModelKind.LINEAR_ITOT)
        if f is not None:
            out.append(np.array([0.0, f.params[0], f.params[1]]))
    return out


def select(
    data: Conference | PairTable,
    kinds: Sequence[ModelKind | str] = ALL_MODELS,
    seed: int = 0,
    grids: dict | None = None,
    n_refine: int | dict = 4,
    options: NMOptions = NMOptions(),
    workers: int = 1,
) -> list[SelectionRow]:
    """Fit every model in ``kinds`` and rank them by AIC.

    A failed fit is reported in its row and does not stop the others.
    """
    models = [get_model(k) for k in kinds]
    if not models:
        raise ValueError("no models to compare")
    table = _as_table(data)
    order = {k: i for i, k in enumerate(ALL_MODELS)}
    fits: dict[ModelKind, FitResult] = {}
    rows = []
    for m in sorted(models, key=lambda m: order[m.kind]):
        grid = (grids or {}).get(m.kind) or (grids or {}).get(m.name)
        refine = n_refine.get(m.name, 4) if isinstance(n_refine, dict) else n_refine
        try:
            f = fit(m, table, grid=grid, seed=seed, n_refine=refine, options=options,
                    extra_starts=_warm_starts(m.kind, fits), workers=workers)
        except Exception as exc:  # reported per row
            rows.append(SelectionRow(m.name, m.k_params, math.nan, math.inf, error=f"{type(exc).__name__}: {exc}"))
            continue
        fits[m.kind] = f
        rows.append(SelectionRow(m.name, m.k_params, f.nll, aic(f.nll, m.k_params), fit=f))
    return rank_rows(rows)


# --------------------------------------------------------------------------
# cumulative collaboration curve

@dataclass
class CurveResult:
    edges: np.ndarray
    observed: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lam: float
    n_sims: int
    seed: int

    @property
    def residuals(self) -> np.ndarray:
        return self.observed - self.mean

    @property
    def inside(self) -> np.ndarray:
        return (self.observed >= self.lower) & (self.observed <= self.upper)

    @property
    def coverage(self) -> float:
        return float(self.inside.mean()) if len(self.inside) else math.nan


def default_lambda(model: CandidateModel, params, table: PairTable) -> float:
    """``a`` rescaled to effective minutes over the whole conference window."""
    if model.kind not in (ModelKind.LINEAR_ODE, ModelKind.NONLINEAR):
        return 0.0
    a = float(params[model.param_names.index("a")])
    return a * float(table.edges[-1] - table.edges[0])


def default_bins(axis: np.ndarray, n_bins: int = DEFAULT_BINS) -> np.ndarray:
    """Quantile edges (deduplicated) so bins follow the data."""
    if len(axis) == 0:
        return np.array([0.0, 1.0])
    edges = np.unique(np.quantile(axis, np.linspace(0, 1, n_bins + 1)))
    if len(edges) == 1:
        edges = np.array([edges[0], edges[0] + 1.0])
    return edges


def cumulative_collaboration_curve(
    data: Conference | PairTable,
    model,
    params,
    bins: int | Sequence[float] = DEFAULT_BINS,
    n_sims: int = 100,
    seed: int = 0,
    lam: float | None = None,
    level: float = 0.95,
    probabilities: np.ndarray | None = None,
) -> CurveResult:
    """Observed vs. simulated cumulative collaborations along ``i_tot + lam K0``.

    Bin ``j`` covers ``(edges[j], edges[j+1]]`` (the first bin also holds its
    left edge); values are cumulative counts up to the bin's right edge.
    Replication ``r`` draws from ``SeedSequence([seed, r])``.
    """
    m = get_model(model)
    table = _as_table(data)
    if lam is None:
        lam = default_lambda(m, params, table)
    axis = total_interaction_axis(table, lam)
    edges = default_bins(axis, bins) if isinstance(bins, (int, np.integer)) else np.asarray(bins, dtype=float)
    n_bins = len(edges) - 1
    if n_bins < 1:
        raise ValueError("need at least two bin edges")
    idx = np.clip(np.searchsorted(edges, axis, side="left") - 1, 0, n_bins - 1)
    inside = (axis >= edges[0]) & (axis <= edges[-1])

    p = m.predict(params, table) if probabilities is None else np.asarray(probabilities, dtype=float)

    def cum(y):
        return np.cumsum(np.bincount(idx[inside], weights=y[inside].astype(float), minlength=n_bins))

    observed = cum(table.y)
    sims = np.empty((n_sims, n_bins))
    for r in range(n_sims):
        rng = np.random.default_rng(np.random.SeedSequence([seed, r]))
        sims[r] = cum(rng.random(len(p)) < p)
    alpha = (1 - level) / 2
    lo, hi = np.quantile(sims, [alpha, 1 - alpha], axis=0, method="inverted_cdf")
    return CurveResult(edges, observed, sims.mean(axis=0), lo, hi, float(lam), n_sims, seed)
