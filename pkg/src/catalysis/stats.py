"""Rank tests, bootstrap resampling and the collaboration-gap / odds analyses.

Exact null distributions are built by dynamic programming over doubled
midranks (integers even with ties), so they are the exact conditional
permutation distributions.  Above the exact cutoff a normal approximation with
tie-corrected variance and a 0.5 continuity correction is used.  Two-sided
p-values are twice the smaller one-sided tail, capped at 1.

Random numbers come from numpy's PCG64 ``Generator``.  Resamples are drawn in
fixed blocks, block ``k`` seeded with ``SeedSequence([seed, k])``, so results
do not depend on how blocks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .conference import Conference, SessionKind, eligible_pairs
from .interaction import i_tot_matrix

EXACT_CUTOFF = 20
ALTERNATIVES = ("two_sided", "greater", "less")
_BLOCK = 256


@dataclass(frozen=True)
class TestReport:
    statistic: float
    p_value: float
    method: str            # "exact" or "normal_approx"
    n1: int
    n2: int = 0
    ties_corrected: bool = False
    alternative: str = "two_sided"


def _check_alternative(alternative: str) -> str:
    alt = alternative.replace("-", "_")
    if alt not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    return alt


def _combine(p_ge: float, p_le: float, alternative: str) -> float:
    if alternative == "greater":
        p = p_ge
    elif alternative == "less":
        p = p_le
    else:
        p = 2.0 * min(p_ge, p_le)
    return float(min(max(p, 0.0), 1.0))


def _tie_term(ranks: np.ndarray) -> float:
    _, counts = np.unique(ranks, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def _subset_sum_counts(weights: Sequence[int], k: int | None) -> np.ndarray:
    """Counts of subset sums of integer ``weights``.

    With ``k`` given, only subsets of exactly ``k`` elements; returns a 1-D
    array indexed by the sum.
    """
    total = int(sum(weights))
    if k is None:
        dist = np.zeros(total + 1)
        dist[0] = 1.0
        for w in weights:
            shifted = np.zeros_like(dist)
            shifted[w:] = dist[: total + 1 - w]
            dist = dist + shifted
        return dist
    table = np.zeros((k + 1, total + 1))
    table[0, 0] = 1.0
    for w in weights:
        # descending k so each weight is used once
        for j in range(k, 0, -1):
            table[j, w:] += table[j - 1, : total + 1 - w]
    return table[k]


# --------------------------------------------------------------------------
# Mann-Whitney U

def mann_whitney_u(
    x: Sequence[float],
    y: Sequence[float],
    alternative: str = "two_sided",
    exact_cutoff: int = EXACT_CUTOFF,
) -> TestReport:
    """Mann-Whitney U test; the statistic is ``U`` for ``x``.

    ``greater`` tests whether ``x`` tends to exceed ``y``.
    """
    alternative = _check_alternative(alternative)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate([x, y])
    ranks = sps.rankdata(pooled)
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    n = n1 + n2
    ties = _tie_term(ranks)

    if n <= exact_cutoff:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _subset_sum_counts(doubled.tolist(), n1)
        obs = int(round(2 * r1))
        total = counts.sum()
        p_ge = counts[obs:].sum() / total
        p_le = counts[: obs + 1].sum() / total
        return TestReport(u1, _combine(p_ge, p_le, alternative), "exact", n1, n2, ties > 0, alternative)

    mu = n1 * n2 / 2.0
    var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)))
    if var <= 0:
        return TestReport(u1, 1.0, "normal_approx", n1, n2, ties > 0, alternative)
    sd = math.sqrt(var)
    p_ge = sps.norm.sf((u1 - mu - 0.5) / sd)
    p_le = sps.norm.cdf((u1 - mu + 0.5) / sd)
    return TestReport(u1, _combine(p_ge, p_le, alternative), "normal_approx", n1, n2, ties > 0, alternative)


# --------------------------------------------------------------------------
# Wilcoxon signed-rank

def wilcoxon_signed_rank(
    differences: Sequence[float],
    alternative: str = "two_sided",
    exact_cutoff: int = EXACT_CUTOFF,
) -> TestReport:
    """Wilcoxon signed-rank test of zero median; zeros are dropped.

    The statistic is ``min(W+, W-)``; ``greater`` tests for a positive median.
    """
    alternative = _check_alternative(alternative)
    d = np.asarray(differences, dtype=float)
    d = d[d != 0]
    n = len(d)
    if n == 0:
        raise ValueError("all differences are zero")
    ranks = sps.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    total = n * (n + 1) / 2.0
    stat = min(w_plus, total - w_plus)
    ties = _tie_term(ranks)

    if n <= exact_cutoff:
        doubled = np.rint(2 * ranks).astype(int)
        counts = _subset_sum_counts(doubled.tolist(), None)
        obs = int(round(2 * w_plus))
        p_ge = counts[obs:].sum() / counts.sum()
        p_le = counts[: obs + 1].sum() / counts.sum()
        return TestReport(stat, _combine(p_ge, p_le, alternative), "exact", n, 0, ties > 0, alternative)

    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - ties / 48.0
    sd = math.sqrt(var)
    p_ge = sps.norm.sf((w_plus - mu - 0.5) / sd)
    p_le = sps.norm.cdf((w_plus - mu + 0.5) / sd)
    return TestReport(stat, _combine(p_ge, p_le, alternative), "normal_approx", n, 0, ties > 0, alternative)


# --------------------------------------------------------------------------
# bootstrap

@dataclass(frozen=True)
class BootstrapSummary:
    mean: float
    ci_low: float
    ci_high: float
    n_resamples: int
    seed: int
    replicates: np.ndarray = field(default=None, repr=False, compare=False)


def bootstrap_replicates(samples: Sequence[np.ndarray], stat, n_resamples: int, seed: int) -> np.ndarray:
    """Apply ``stat(*resampled)`` to ``n_resamples`` joint resamples.

    Each array in ``samples`` is resampled independently with replacement.
    """
    samples = [np.asarray(s, dtype=float) for s in samples]
    out = np.empty(n_resamples)
    for block, start in enumerate(range(0, n_resamples, _BLOCK)):
        stop = min(start + _BLOCK, n_resamples)
        rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
        draws = [s[rng.integers(0, len(s), size=(stop - start, len(s)))] for s in samples]
        out[start:stop] = stat(*draws)
    return out


def percentile_ci(values: np.ndarray, level: float) -> tuple[float, float]:
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(values, [alpha, 1.0 - alpha], method="inverted_cdf")
    return float(lo), float(hi)


def bootstrap_mean(
    x: Sequence[float], n_resamples: int = 2000, level: float = 0.95, seed: int = 0
) -> BootstrapSummary:
    """Percentile bootstrap of the mean; ``mean`` is the mean of the replicates."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        raise ValueError("empty sample")
    reps = bootstrap_replicates([x], lambda d: d.mean(axis=1), n_resamples, seed)
    lo, hi = percentile_ci(reps, level)
    return BootstrapSummary(float(reps.mean()), lo, hi, n_resamples, seed, reps)


def kde_samples(values: np.ndarray, n_points: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian KDE (Silverman bandwidth) sampled on a grid spanning the data."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2 or np.std(values) == 0:
        return np.array([]), np.array([])
    kde = sps.gaussian_kde(values, bw_method="silverman")
    pad = 3 * kde.factor * values.std(ddof=1)
    grid = np.linspace(values.min() - pad, values.max() + pad, n_points)
    return grid, kde(grid)


# --------------------------------------------------------------------------
# collaborator analyses

def _pair_records(confs: Conference | Iterable[Conference]):
    if isinstance(confs, Conference):
        confs = [confs]
    i_tot, y, k0, small = [], [], [], []
    for c in confs:
        pairs = eligible_pairs(c)
        keys = [p.key for p in pairs]
        i_tot.append(i_tot_matrix(c, keys))
        y.append(np.array([p.collaborated for p in pairs], dtype=bool))
        k0.append(np.array([p.k0 for p in pairs], dtype=int))
        small.append(shared_session_counts(c, keys, SessionKind.SMALL_GROUP))
    cat = np.concatenate
    return cat(i_tot), cat(y), cat(k0), cat(small)


def shared_session_counts(c: Conference, pairs, kind: SessionKind) -> np.ndarray:
    """Number of sessions of ``kind`` in which each pair shares a group."""
    index = {p.id: i for i, p in enumerate(c.participants)}
    ia = np.array([index[a] for a, _ in pairs], dtype=int)
    ib = np.array([index[b] for _, b in pairs], dtype=int)
    out = np.zeros(len(pairs), dtype=int)
    for s in c.sessions:
        if s.kind is not kind:
            continue
        g = np.full(len(index), -1)
        for gi, grp in enumerate(s.groups):
            for m in grp:
                g[index[m]] = gi
        out += (g[ia] >= 0) & (g[ia] == g[ib])
    return out


@dataclass
class GapReport:
    mean_collab: float
    mean_noncollab: float
    ratio: float
    u_test: TestReport
    boot_collab: BootstrapSummary
    boot_noncollab: BootstrapSummary
    kde_collab: tuple[np.ndarray, np.ndarray]
    kde_noncollab: tuple[np.ndarray, np.ndarray]
    n_collab: int
    n_noncollab: int


def collaboration_gap_analysis(
    confs: Conference | Iterable[Conference],
    n_resamples: int = 2000,
    seed: int = 0,
    alternative: str = "two_sided",
) -> GapReport:
    """Compare ``i_tot`` of collaborating and non-collaborating pairs.

    Several conferences are pooled by concatenating their pair records.
    """
    i_tot, y, _, _ = _pair_records(confs)
    xc, xn = i_tot[y], i_tot[~y]
    if len(xc) == 0 or len(xn) == 0:
        raise ValueError("need at least one collaborating and one non-collaborating pair")
    mc, mn = float(xc.mean()), float(xn.mean())
    ratio = mc / mn if mn != 0 else (1.0 if mc == 0 else math.inf)
    bc = bootstrap_mean(xc, n_resamples, seed=seed)
    bn = bootstrap_mean(xn, n_resamples, seed=seed + 1)
    return GapReport(
        mc, mn, ratio,
        mann_whitney_u(xc, xn, alternative),
        bc, bn,
        kde_samples(bc.replicates), kde_samples(bn.replicates),
        len(xc), len(xn),
    )


def odds(successes: float, n: float) -> float:
    if n == 0:
        return math.nan
    failures = n - successes
    return successes / failures if failures > 0 else math.inf


@dataclass
class OddsReport:
    odds_0: float | None
    odds_1: float | None
    ci_0: tuple[float, float] | None
    ci_1: tuple[float, float] | None
    odds_ratio: float | None
    ratio_ci: tuple[float, float] | None
    n_0: int
    n_1: int
    collab_0: int
    collab_1: int
    notes: list[str] = field(default_factory=list)


def _odds_rows(d: np.ndarray) -> np.ndarray:
    r = d.sum(axis=1)
    f = d.shape[1] - r
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(f > 0, r / np.where(f > 0, f, 1), np.inf)


def mini_session_odds(
    confs: Conference | Iterable[Conference],
    n_resamples: int = 2000,
    seed: int = 0,
    level: float = 0.95,
) -> OddsReport:
    """Collaboration odds for K0 = 0 pairs sharing exactly one vs. no small group."""
    _, y, k0, small = _pair_records(confs)
    keep = k0 == 0
    y0 = y[keep & (small == 0)].astype(float)
    y1 = y[keep & (small == 1)].astype(float)
    rep = OddsReport(None, None, None, None, None, None, len(y0), len(y1),
                     int(y0.sum()), int(y1.sum()))
    if len(y0):
        rep.odds_0 = odds(y0.sum(), len(y0))
        rep.ci_0 = percentile_ci(bootstrap_replicates([y0], _odds_rows, n_resamples, seed), level)
    else:
        rep.notes.append("stratum 0 (no shared small group) is empty: not computable")
    if len(y1):
        rep.odds_1 = odds(y1.sum(), len(y1))
        rep.ci_1 = percentile_ci(bootstrap_replicates([y1], _odds_rows, n_resamples, seed + 1), level)
    else:
        rep.notes.append("stratum 1 (one shared small group) is empty: not computable")
    if len(y0) and len(y1):
        with np.errstate(divide="ignore", invalid="ignore"):
            rep.odds_ratio = rep.odds_1 / rep.odds_0 if rep.odds_0 else math.inf
            ratios = bootstrap_replicates(
                [y1, y0], lambda a, b: _odds_rows(a) / _odds_rows(b), n_resamples, seed + 2
            )
        ratios = np.where(np.isnan(ratios), np.inf, ratios)
        rep.ratio_ci = percentile_ci(ratios, level)
    return rep
