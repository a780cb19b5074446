"""Pairwise interaction: total effective interaction and intensity profiles.

A pair co-attending a session of duration ``T`` and group size ``N`` is credited
``2 T / N`` effective minutes (a two-person session of length ``T`` counts as
``T``).  The instantaneous intensity is

    I(t) = I_max / (6 a + 1) * (a K0 + s(t))

with ``s = 2/N`` while co-attending, ``0`` while either member is in some other
group of a running session, and ``2/N_tot`` outside sessions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .conference import Conference, PairOutcome, eligible_pairs, pair_id, pair_key


def session_effective_interaction(duration_T: float, group_size_N: int) -> float:
    """Effective minutes ``2 T / N`` for one co-attended session."""
    if not duration_T > 0:
        raise ValueError(f"session duration must be positive, got {duration_T}")
    if group_size_N < 2:
        raise ValueError(f"group size must be at least 2, got {group_size_N}")
    return 2.0 * duration_T / group_size_N


def _resolve_pair(c: Conference, pair) -> tuple[str, str]:
    if isinstance(pair, PairOutcome):
        a, b = pair.a, pair.b
    elif isinstance(pair, str):
        a, _, b = pair.partition("|")
    else:
        a, b = pair
    ids = {p.id for p in c.participants}
    for x in (a, b):
        if x not in ids:
            raise KeyError(f"unknown participant {x!r} in pair {pair!r}")
    if a == b:
        raise KeyError(f"pair {pair!r} is not a pair of distinct participants")
    return pair_key(a, b)


def total_effective_interaction(c: Conference, pair) -> float:
    """Sum of ``2 T_k / N_k`` over sessions where both members share a group."""
    a, b = _resolve_pair(c, pair)
    total = 0.0
    for s in c.sessions:
        for g in s.groups:
            if a in g and b in g:
                total += session_effective_interaction(s.duration, len(g))
                break
    return total


def timeline(c: Conference) -> np.ndarray:
    """Segment edges: ``t_start``, every session boundary, ``t_collab``."""
    pts = {float(c.t_start), float(c.t_collab)}
    for s in c.sessions:
        for t in (s.start, s.end):
            if c.t_start < t < c.t_collab:
                pts.add(float(t))
    return np.array(sorted(pts))


def _session_terms(c: Conference, ia: np.ndarray, ib: np.ndarray, edges: np.ndarray):
    """Per-segment raw term s for index pairs (ia, ib); shape (n_pairs, n_segments)."""
    ids = [p.id for p in c.participants]
    index = {pid: i for i, pid in enumerate(ids)}
    n_part = len(ids)
    n_seg = len(edges) - 1
    baseline = 2.0 / c.n_tot if c.n_tot else 0.0

    best = np.full((len(ia), n_seg), -1.0)  # max 2/N over co-attended active sessions
    busy = np.zeros((len(ia), n_seg), dtype=bool)
    for s in c.sessions:
        gidx = np.full(n_part, -1)
        sizes = np.zeros(max(len(s.groups), 1))
        for gi, g in enumerate(s.groups):
            sizes[gi] = len(g)
            for m in g:
                gidx[index[m]] = gi
        ga, gb = gidx[ia], gidx[ib]
        same = (ga >= 0) & (ga == gb)
        val = np.where(same, 2.0 / np.where(same, sizes[np.maximum(ga, 0)], 1.0), -1.0)
        attend = (ga >= 0) | (gb >= 0)
        mids = 0.5 * (edges[:-1] + edges[1:])
        active = (mids > s.start) & (mids < s.end)
        if not active.any():
            continue
        best[:, active] = np.maximum(best[:, active], val[:, None])
        busy[:, active] |= attend[:, None]
    return np.where(best >= 0, best, np.where(busy, 0.0, baseline))


@dataclass(frozen=True)
class InteractionProfile:
    """Piecewise-constant, right-continuous intensity on ``[times[0], times[-1]]``."""

    pair: str
    times: np.ndarray        # segment edges, length m + 1
    intensities: np.ndarray  # value on [times[j], times[j+1]), length m
    i_tot: float
    k0: int

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return [(float(t), float(v)) for t, v in zip(self.times[:-1], self.intensities)]

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_collab(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> float:
        if not self.times[0] <= t <= self.times[-1]:
            raise ValueError(f"t={t} outside profile window")
        if len(self.intensities) == 0:
            raise ValueError("empty profile")
        j = int(np.searchsorted(self.times, t, side="right")) - 1
        return float(self.intensities[min(j, len(self.intensities) - 1)])

    def max_intensity(self) -> float:
        return float(self.intensities.max()) if len(self.intensities) else 0.0


def intensity_scale(a: float, i_max: float) -> float:
    return i_max / (6.0 * a + 1.0)


def interaction_profile(c: Conference, pair, a: float, i_max: float) -> InteractionProfile:
    if a < 0:
        raise ValueError("a must be non-negative")
    if not i_max > 0:
        raise ValueError("i_max must be positive")
    x, y = _resolve_pair(c, pair)
    index = {p.id: i for i, p in enumerate(c.participants)}
    edges = timeline(c)
    s = _session_terms(c, np.array([index[x]]), np.array([index[y]]), edges)[0]
    k0 = c.prior_knowledge.get(x, y)
    return InteractionProfile(
        pair=pair_id(x, y),
        times=edges,
        intensities=intensity_scale(a, i_max) * (a * k0 + s),
        i_tot=total_effective_interaction(c, (x, y)),
        k0=k0,
    )


@dataclass
class PairTable:
    """Vectorised per-pair features of a conference's eligible pairs.

    Profiles are stored as the raw session term ``s`` per segment.  Rows with
    identical ``(K0, s)`` share one trajectory, so ``unique_s``/``unique_k0``
    hold the distinct rows and ``inverse`` maps pairs onto them.
    """

    pairs: list[PairOutcome]
    y: np.ndarray
    k0: np.ndarray
    i_tot: np.ndarray
    edges: np.ndarray
    s: np.ndarray
    n_tot: int
    unique_s: np.ndarray
    unique_k0: np.ndarray
    inverse: np.ndarray

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def n_collab(self) -> int:
        return int(self.y.sum())

    def intensities(self, a: float, i_max: float, unique: bool = True) -> np.ndarray:
        s, k0 = (self.unique_s, self.unique_k0) if unique else (self.s, self.k0)
        return intensity_scale(a, i_max) * (a * k0[:, None] + s)

    def max_session_term(self) -> np.ndarray:
        """Per-pair maximum of ``s(t)`` (largest instantaneous exposure)."""
        if self.s.shape[1] == 0:
            return np.zeros(len(self.pairs))
        return self.s.max(axis=1)

    def subset(self, mask: np.ndarray) -> "PairTable":
        idx = np.flatnonzero(mask)
        return _table_from_arrays(
            [self.pairs[i] for i in idx], self.y[idx], self.k0[idx], self.i_tot[idx],
            self.edges, self.s[idx], self.n_tot,
        )


def _table_from_arrays(pairs, y, k0, i_tot, edges, s, n_tot) -> PairTable:
    key = np.concatenate([k0[:, None].astype(float), s], axis=1) if len(pairs) else np.zeros((0, 1 + s.shape[1]))
    if len(pairs):
        uniq, inverse = np.unique(key, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
    else:
        uniq, inverse = key, np.zeros(0, dtype=int)
    return PairTable(
        pairs=list(pairs), y=np.asarray(y, dtype=bool), k0=np.asarray(k0, dtype=int),
        i_tot=np.asarray(i_tot, dtype=float), edges=edges, s=s, n_tot=n_tot,
        unique_s=np.ascontiguousarray(uniq[:, 1:]), unique_k0=uniq[:, 0].copy(),
        inverse=inverse,
    )


def i_tot_matrix(c: Conference, pairs: Sequence[tuple[str, str]]) -> np.ndarray:
    """Vectorised ``total_effective_interaction`` for many pairs."""
    index = {p.id: i for i, p in enumerate(c.participants)}
    ia = np.array([index[a] for a, _ in pairs], dtype=int)
    ib = np.array([index[b] for _, b in pairs], dtype=int)
    total = np.zeros(len(pairs))
    for s in c.sessions:
        gidx = np.full(len(index), -1)
        sizes = np.ones(max(len(s.groups), 1))
        for gi, g in enumerate(s.groups):
            sizes[gi] = len(g)
            for m in g:
                gidx[index[m]] = gi
        ga, gb = gidx[ia], gidx[ib]
        same = (ga >= 0) & (ga == gb)
        total += np.where(same, 2.0 * s.duration / sizes[np.maximum(ga, 0)], 0.0)
    return total


def pair_table(c: Conference, pairs: list[PairOutcome] | None = None) -> PairTable:
    """Build the :class:`PairTable` for ``c`` (eligible pairs by default)."""
    if pairs is None:
        pairs = eligible_pairs(c)
    index = {p.id: i for i, p in enumerate(c.participants)}
    ia = np.array([index[p.a] for p in pairs], dtype=int)
    ib = np.array([index[p.b] for p in pairs], dtype=int)
    edges = timeline(c)
    s = _session_terms(c, ia, ib, edges)
    return _table_from_arrays(
        pairs,
        np.array([p.collaborated for p in pairs], dtype=bool),
        np.array([p.k0 for p in pairs], dtype=int),
        i_tot_matrix(c, [p.key for p in pairs]),
        edges, s, c.n_tot,
    )


def total_interaction_axis(table: PairTable, lam: float) -> np.ndarray:
    """Binning axis for cumulative-collaboration curves: ``i_tot + lam * K0``."""
    return table.i_tot + lam * table.k0
