"""Simulated-annealing group assignment and counterfactual-schedule analysis.

An :class:`AssignmentProblem` fixes, for every session of one kind, the number
of fellow slots per group, any fixed (non-fellow) members and optional group
topics.  Moves swap two fellows between groups of one session, so group sizes
never change.

Energy (weights in :class:`EnergyWeights`):

* repeat pairing: ``sum over fellow pairs of max(0, times together - 1)``
* small groups only: pairs with ``K0 > 0`` placed together
* homogeneity: ``sum over groups, attributes, values of C(n_value, 2)``
* topic interest below the minimum is a hard constraint (energy ``inf``)
* reward ``-interest_reward`` per fellow placed in a topic rated 4 or 5
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _anneal
from .conference import Conference, Session, SessionKind, eligible_pairs
from .interaction import i_tot_matrix
from .stats import TestReport, wilcoxon_signed_rank

SIZE_BOUNDS = {SessionKind.DISCUSSION: (8, 12), SessionKind.SMALL_GROUP: (3, 4)}
SOLUTIONS_SCHEMA = 1


class AnnealError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnergyWeights:
    repeat_small: float = 100.0
    repeat_discussion: float = 1.0
    prior_knowledge: float = 5.0
    homogeneity: float = 1.0
    interest_reward: float = 0.5
    min_interest: int = 3
    reward_interest: int = 4
    #: penalty per hard violation while annealing (outputs must have none)
    hard_penalty: float = 1000.0


@dataclass(frozen=True)
class AnnealSchedule:
    #: initial temperature; <= 0 calibrates to ~80% uphill acceptance
    T0: float = 0.0
    #: geometric factor per sweep; <= 0 derives it from ``final_ratio``
    cooling: float = 0.995
    sweeps: int = 500
    #: final temperature as a fraction of T0 when cooling is derived
    final_ratio: float = 1e-4
    #: proposals per sweep; 0 means one per fellow per session
    moves_per_sweep: int = 0
    n_probe: int = 100

    def cooling_factor(self) -> float:
        if self.cooling > 0:
            return float(self.cooling)
        return float(self.final_ratio ** (1.0 / max(self.sweeps, 1)))


@dataclass(frozen=True)
class SessionSlots:
    session_id: str
    fellow_sizes: tuple[int, ...]
    fixed: tuple[frozenset[str], ...]
    topics: tuple[str | None, ...] | None = None

    @property
    def group_sizes(self) -> tuple[int, ...]:
        return tuple(n + len(f) for n, f in zip(self.fellow_sizes, self.fixed))


@dataclass
class AssignmentProblem:
    kind: SessionKind
    fellows: tuple[str, ...]
    sessions: tuple[SessionSlots, ...]
    k0: Mapping[tuple[str, str], int] = field(default_factory=dict)
    attributes: Mapping[str, Mapping[str, str]] = field(default_factory=dict)
    interests: Mapping[str, Mapping[str, int]] = field(default_factory=dict)
    weights: EnergyWeights = EnergyWeights()
    enforce_bounds: bool = True

    def __post_init__(self):
        self.kind = SessionKind(self.kind)
        self.fellows = tuple(self.fellows)
        self.sessions = tuple(self.sessions)
        problems = self.problems()
        if problems:
            raise ValueError("infeasible assignment problem: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if len(set(self.fellows)) != len(self.fellows):
            out.append("duplicate fellow ids")
        bounds = SIZE_BOUNDS.get(self.kind) if self.enforce_bounds else None
        for s in self.sessions:
            if len(s.fellow_sizes) != len(s.fixed):
                out.append(f"session {s.session_id}: sizes and fixed members disagree")
            if sum(s.fellow_sizes) != len(self.fellows):
                out.append(
                    f"session {s.session_id}: {sum(s.fellow_sizes)} fellow slots for {len(self.fellows)} fellows"
                )
            if any(n < 0 for n in s.fellow_sizes):
                out.append(f"session {s.session_id}: negative group size")
            if bounds:
                lo, hi = bounds
                for g, size in enumerate(s.group_sizes):
                    if not lo <= size <= hi:
                        out.append(f"session {s.session_id} group {g}: size {size} outside [{lo}, {hi}]")
            if s.topics is not None and len(s.topics) != len(s.fellow_sizes):
                out.append(f"session {s.session_id}: one topic per group required")
        return out

    @property
    def repeat_weight(self) -> float:
        w = self.weights
        return w.repeat_small if self.kind is SessionKind.SMALL_GROUP else w.repeat_discussion

    @classmethod
    def from_conference(
        cls,
        c: Conference,
        kind: SessionKind | str,
        weights: EnergyWeights = EnergyWeights(),
        attributes: Sequence[str] | None = None,
        enforce_bounds: bool = True,
    ) -> "AssignmentProblem":
        """Skeleton of every ``kind`` session of ``c``; current groups give the sizes."""
        kind = SessionKind(kind)
        fellows = tuple(c.fellows)
        fset = set(fellows)
        slots = []
        for s in c.sessions:
            if s.kind is not kind:
                continue
            sizes = tuple(len(g & fset) for g in s.groups)
            fixed = tuple(frozenset(g - fset) for g in s.groups)
            slots.append(SessionSlots(s.id, sizes, fixed, s.group_topics))
        parts = {p.id: p for p in c.participants}
        names = attributes
        if names is None:
            names = sorted({a for f in fellows for a in parts[f].attributes})
        return cls(
            kind=kind,
            fellows=fellows,
            sessions=tuple(slots),
            k0={k: v for k, v in c.prior_knowledge.items()},
            attributes={f: {a: parts[f].attributes[a] for a in names if a in parts[f].attributes} for f in fellows},
            interests={f: dict(parts[f].topic_interests or {}) for f in fellows},
            weights=weights,
            enforce_bounds=enforce_bounds,
        )

    # -- array encoding ------------------------------------------------------
    def _encode(self):
        nf = len(self.fellows)
        fidx = {f: i for i, f in enumerate(self.fellows)}
        S = len(self.sessions)
        G = max((len(s.fellow_sizes) for s in self.sessions), default=1)
        gsize = np.zeros((S, G), dtype=np.int64)
        topics = -np.ones((S, G), dtype=np.int64)
        topic_ids = sorted({t for s in self.sessions for t in (s.topics or ()) if t is not None})
        tidx = {t: i for i, t in enumerate(topic_ids)}
        for si, s in enumerate(self.sessions):
            gsize[si, : len(s.fellow_sizes)] = s.fellow_sizes
            for g, t in enumerate(s.topics or ()):
                if t is not None:
                    topics[si, g] = tidx[t]
        k0pos = np.zeros((nf, nf), dtype=np.bool_)
        for (a, b), v in self.k0.items():
            if v > 0 and a in fidx and b in fidx:
                k0pos[fidx[a], fidx[b]] = k0pos[fidx[b], fidx[a]] = True
        names = sorted({a for f in self.fellows for a in self.attributes.get(f, {})})
        attrs = -np.ones((nf, max(len(names), 0)), dtype=np.int64)
        codes: list[dict[str, int]] = [{} for _ in names]
        for f in self.fellows:
            for ai, a in enumerate(names):
                v = self.attributes.get(f, {}).get(a)
                if v is not None:
                    attrs[fidx[f], ai] = codes[ai].setdefault(str(v), len(codes[ai]))
        n_vals = max((len(c) for c in codes), default=1)
        interest = np.zeros((nf, max(len(topic_ids), 1)), dtype=np.int64)
        for f in self.fellows:
            for t, r in (self.interests.get(f) or {}).items():
                if t in tidx:
                    interest[fidx[f], tidx[t]] = int(r)
        w = self.weights
        wvec = np.array([self.repeat_weight, w.prior_knowledge, w.homogeneity, w.hard_penalty,
                         w.interest_reward, w.min_interest, w.reward_interest], dtype=float)
        return fidx, gsize, topics, k0pos, attrs, n_vals, interest, wvec

    def random_state(self, rng: np.random.Generator) -> np.ndarray:
        nf = len(self.fellows)
        G = max((len(s.fellow_sizes) for s in self.sessions), default=1)
        grp = np.zeros((len(self.sessions), nf), dtype=np.int64)
        for si, s in enumerate(self.sessions):
            labels = np.repeat(np.arange(len(s.fellow_sizes)), s.fellow_sizes)
            grp[si] = labels[rng.permutation(nf)]
        assert G >= 1
        return grp

    def decode(self, grp: np.ndarray) -> dict[str, tuple[frozenset[str], ...]]:
        out = {}
        for si, s in enumerate(self.sessions):
            groups = []
            for g in range(len(s.fellow_sizes)):
                fellows = {self.fellows[f] for f in np.flatnonzero(grp[si] == g)}
                groups.append(frozenset(fellows | s.fixed[g]))
            out[s.session_id] = tuple(groups)
        return out


def canonical(assignment: Mapping[str, Iterable[Iterable[str]]]) -> tuple:
    """Order-free key: per session, the sorted set of sorted groups."""
    return tuple(sorted(
        (sid, tuple(sorted(tuple(sorted(g)) for g in groups))) for sid, groups in assignment.items()
    ))


@dataclass
class ScheduleSolution:
    assignment: dict[str, tuple[frozenset[str], ...]]
    energy: float
    rank: int = 0

    def key(self) -> tuple:
        return canonical(self.assignment)


def energy(solution: ScheduleSolution | Mapping, problem: AssignmentProblem) -> float:
    """Energy of a full assignment; ``inf`` for structural or hard-rule violations."""
    assignment = solution.assignment if isinstance(solution, ScheduleSolution) else solution
    fidx = {f: i for i, f in enumerate(problem.fellows)}
    nf = len(fidx)
    grp = np.zeros((len(problem.sessions), nf), dtype=np.int64)
    for si, s in enumerate(problem.sessions):
        groups = assignment.get(s.session_id)
        if groups is None or len(groups) != len(s.fellow_sizes):
            return math.inf
        seen = np.zeros(nf, dtype=int)
        for g, members in enumerate(groups):
            members = frozenset(members)
            if not s.fixed[g] <= members:
                return math.inf
            fellows = members - s.fixed[g]
            if len(fellows) != s.fellow_sizes[g] or any(f not in fidx for f in fellows):
                return math.inf
            for f in fellows:
                grp[si, fidx[f]] = g
                seen[fidx[f]] += 1
        if np.any(seen != 1):
            return math.inf
    _, gsize, topics, k0pos, attrs, n_vals, interest, w = problem._encode()
    members, pos, fill, cnt, acnt = _anneal._build(grp, gsize, attrs.shape[1], n_vals, attrs)
    use_k0 = problem.kind is SessionKind.SMALL_GROUP
    e, hard = _anneal._energy(grp, fill, members, cnt, acnt, topics, k0pos, interest, use_k0, w)
    if hard:
        return math.inf
    return float(e)


def _chain_seed(seed: int, chain: int) -> tuple[np.random.Generator, int]:
    ss = np.random.SeedSequence([seed, chain])
    return np.random.default_rng(ss), int(ss.generate_state(1)[0] % (2**31 - 1))


def _run_chain(job):
    problem, schedule, seed, chain = job
    _, gsize, topics, k0pos, attrs, n_vals, interest, w = problem._encode()
    use_k0 = problem.kind is SessionKind.SMALL_GROUP
    moves = schedule.moves_per_sweep or len(problem.fellows) * len(problem.sessions)
    rng, cseed = _chain_seed(seed, chain)
    grp = problem.random_state(rng)
    best, _, ok, _ = _anneal.run_chain(
        grp, gsize, topics, k0pos, attrs, n_vals, interest, use_k0, w,
        float(schedule.T0), schedule.cooling_factor(), int(schedule.sweeps), int(moves),
        cseed, int(schedule.n_probe),
    )
    return best if ok else None


def anneal(
    problem: AssignmentProblem,
    schedule: AnnealSchedule = AnnealSchedule(),
    n_solutions: int = 1,
    seed: int = 0,
    n_chains: int | None = None,
    max_chains: int | None = None,
    workers: int = 1,
) -> list[ScheduleSolution]:
    """Best distinct feasible assignments over independent chains, ranked by energy.

    Each chain contributes its best feasible state; chains are added (up to
    ``max_chains``, default ``4 * n_chains``) until ``n_solutions`` distinct
    solutions exist.  Fewer may be returned if the space is too small.
    Chain ``k`` is seeded from ``(seed, k)`` and results are consumed in chain
    order, so ``workers`` does not change the output.
    """
    if n_solutions < 1:
        raise ValueError("n_solutions must be positive")
    if not problem.sessions:
        return [ScheduleSolution({}, 0.0, 0)]
    n_chains = n_solutions if n_chains is None else n_chains
    max_chains = 4 * n_chains if max_chains is None else max_chains
    found: dict[tuple, ScheduleSolution] = {}

    def consume(best):
        if best is None:
            return
        assignment = problem.decode(best)
        sol = ScheduleSolution(assignment, energy(assignment, problem))
        if math.isfinite(sol.energy):
            found.setdefault(sol.key(), sol)

    def wanted(chain):
        return chain < max_chains and (chain < n_chains or len(found) < n_solutions)

    chain = 0
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            while wanted(chain):
                batch = list(range(chain, min(max(n_chains, chain + workers), max_chains)))
                for k, best in zip(batch, ex.map(_run_chain, [(problem, schedule, seed, k) for k in batch])):
                    if not wanted(k):
                        break
                    consume(best)
                    chain = k + 1
    else:
        while wanted(chain):
            consume(_run_chain((problem, schedule, seed, chain)))
            chain += 1
    if not found:
        raise AnnealError("no feasible assignment found (hard constraints unsatisfiable?)")
    ranked = sorted(found.values(), key=lambda s: (s.energy, s.key()))[:n_solutions]
    for r, s in enumerate(ranked):
        s.rank = r
    return ranked


def apply_assignment(c: Conference, assignment: Mapping[str, Sequence[Iterable[str]]]) -> Conference:
    """``c`` with the groups of the named sessions replaced."""
    sessions = []
    for s in c.sessions:
        if s.id in assignment:
            groups = tuple(frozenset(g) for g in assignment[s.id])
            s = Session(s.id, s.kind, s.start, s.end, groups, s.group_topics)
        sessions.append(s)
    return c.replace(sessions=tuple(sessions))


# --------------------------------------------------------------------------
# solution files

def save_solutions(solutions: Sequence[ScheduleSolution], path: str | Path, meta: Mapping | None = None) -> None:
    doc = {
        "schema_version": SOLUTIONS_SCHEMA,
        "meta": dict(meta or {}),
        "solutions": [
            {
                "rank": s.rank,
                "energy": s.energy,
                "assignment": {sid: [sorted(g) for g in groups] for sid, groups in s.assignment.items()},
            }
            for s in solutions
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_solutions(path: str | Path) -> list[ScheduleSolution]:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SOLUTIONS_SCHEMA:
        raise ValueError(f"unsupported solutions schema_version {doc.get('schema_version')!r}")
    return [
        ScheduleSolution(
            {sid: tuple(frozenset(g) for g in groups) for sid, groups in s["assignment"].items()},
            float(s["energy"]), int(s["rank"]),
        )
        for s in doc["solutions"]
    ]


def weights_dict(w: EnergyWeights) -> dict:
    return asdict(w)


# --------------------------------------------------------------------------
# counterfactual schedules

@dataclass
class CounterfactualReport:
    i_bar_actual: float
    i_bar_cf: np.ndarray            # length |D| * |S|, index i * |S| + j
    combos: list[tuple[int, int]]
    shares_small_groups: np.ndarray
    wilcoxon: TestReport | None
    fraction_actual_greater: float

    @property
    def differences(self) -> np.ndarray:
        return self.i_bar_actual - self.i_bar_cf

    @property
    def exceptions(self) -> np.ndarray:
        """Combinations where the actual schedule is not strictly ahead."""
        return np.flatnonzero(~(self.differences > 0))

    def rows(self) -> list[dict]:
        return [
            {"combination": k, "discussion_solution": i, "smallgroup_solution": j,
             "i_bar_cf": float(v), "difference": float(self.i_bar_actual - v),
             "shares_small_groups": bool(sh)}
            for k, ((i, j), v, sh) in enumerate(zip(self.combos, self.i_bar_cf, self.shares_small_groups))
        ]


def _contribution(c: Conference, sessions: Sequence[Session], pairs) -> np.ndarray:
    return i_tot_matrix(c.replace(sessions=tuple(sessions)), pairs)


def _as_sessions(c: Conference, assignment: Mapping) -> list[Session]:
    by_id = {s.id: s for s in c.sessions}
    out = []
    for sid, groups in assignment.items():
        if sid not in by_id:
            raise KeyError(f"solution names unknown session {sid!r}")
        s = by_id[sid]
        out.append(Session(s.id, s.kind, s.start, s.end, tuple(frozenset(g) for g in groups), s.group_topics))
    # fixed order keeps the float sums identical for identical schedules
    return sorted(out, key=lambda s: (s.start, s.id))


def counterfactual_analysis(
    c: Conference,
    discussion_solutions: Sequence[ScheduleSolution],
    smallgroup_solutions: Sequence[ScheduleSolution],
) -> CounterfactualReport:
    """Mean ``i_tot`` of actual collaborators under every combined alternative schedule."""
    pairs = [p.key for p in eligible_pairs(c) if p.collaborated]
    if not pairs:
        raise ValueError("conference has no recorded collaborations")
    if not discussion_solutions or not smallgroup_solutions:
        raise ValueError("need at least one solution of each kind")
    d_ids = set(discussion_solutions[0].assignment)
    s_ids = set(smallgroup_solutions[0].assignment)
    other = [s for s in c.sessions if s.id not in d_ids | s_ids]
    base = _contribution(c, other, pairs)

    def parts(ids, sols):
        actual = {s.id: s.groups for s in c.sessions if s.id in ids}
        act = _contribution(c, _as_sessions(c, actual), pairs)
        alts = [_contribution(c, _as_sessions(c, sol.assignment), pairs) for sol in sols]
        return actual, act, alts

    _, d_act, d_alts = parts(d_ids, discussion_solutions)
    s_actual, s_act, s_alts = parts(s_ids, smallgroup_solutions)
    i_bar_actual = float(np.mean(base + d_act + s_act))
    actual_key = canonical(s_actual)
    s_shares = [canonical(sol.assignment) == actual_key for sol in smallgroup_solutions]

    combos, values, shares = [], [], []
    for i, d in enumerate(d_alts):
        for j, s in enumerate(s_alts):
            combos.append((i, j))
            values.append(float(np.mean(base + d + s)))
            shares.append(s_shares[j])
    values = np.array(values)
    diffs = i_bar_actual - values
    try:
        wil = wilcoxon_signed_rank(diffs)
    except ValueError:
        wil = None
    return CounterfactualReport(
        i_bar_actual, values, combos, np.array(shares, dtype=bool), wil, float(np.mean(diffs > 0)),
    )
