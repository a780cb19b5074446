"""Synthetic conferences and ground-truth collaboration outcomes.

Timetable: ``t = 0`` is one hour before the first session.  Discussion and
small-group sessions alternate, ``sessions_per_day`` per day with a short break
between them, and teams form ``collab_delay`` minutes after the last session.
Discussion groups hold one facilitator each; small groups are fellows only.
Groups are assigned with the annealer under default constraints.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .conference import (
    Conference,
    Participant,
    ProposalTeam,
    Role,
    Session,
    SessionKind,
    build_conference,
)
from .interaction import pair_table
from .models import get_model
from .scheduler import SIZE_BOUNDS, AnnealSchedule, AssignmentProblem, EnergyWeights, SessionSlots, anneal

DAY = 1440.0

#: nonlinear generating parameters: small groups cross the barrier for any
#: K0, discussions only for K0 >= 3; collaboration rate about 5.5 %
DEFAULT_NL_PARAMS = (0.5, 1.0, 0.01, 0.1, 0.9, 0.25, 1.0, 0.05)
DEFAULT_K0_DIST = (0.62, 0.14, 0.1, 0.07, 0.04, 0.02, 0.01)
DEFAULT_INTEREST_DIST = (0.05, 0.1, 0.25, 0.3, 0.3)


@dataclass(frozen=True)
class SynthSpec:
    n_fellows: int = 50
    n_facilitators: int = 5
    n_discussion_sessions: int = 4
    n_smallgroup_sessions: int = 4
    discussion_minutes: float = 75.0
    smallgroup_minutes: float = 30.0
    k0_distribution: tuple[float, ...] = DEFAULT_K0_DIST
    model: str = "NonlinearCatalysis"
    params: tuple[float, ...] = DEFAULT_NL_PARAMS
    seed: int = 0
    sessions_per_day: int = 4
    break_minutes: float = 15.0
    collab_delay: float = 60.0
    attributes: Mapping[str, int] = field(
        default_factory=lambda: {"discipline": 5, "methodology": 3, "gender": 2}
    )
    interest_distribution: tuple[float, ...] = DEFAULT_INTEREST_DIST
    anneal_sweeps: int = 200
    #: record fully-connected collaborator groups of 3-4 as one team
    merge_teams: bool = False
    name: str = "synthetic"

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("invalid SynthSpec: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.n_fellows < 2:
            out.append("need at least 2 fellows")
        for name in ("n_facilitators", "n_discussion_sessions", "n_smallgroup_sessions"):
            if getattr(self, name) < 0:
                out.append(f"{name} must be non-negative")
        if self.n_discussion_sessions and self.n_facilitators < 1:
            out.append("discussion sessions need facilitators (one per group)")
        if len(self.k0_distribution) != 7 or not math.isclose(sum(self.k0_distribution), 1.0, abs_tol=1e-9):
            out.append("k0_distribution must have 7 entries (K0 = 0..6) summing to 1")
        if any(p < 0 for p in self.k0_distribution):
            out.append("k0_distribution entries must be non-negative")
        if len(self.interest_distribution) != 5 or not math.isclose(sum(self.interest_distribution), 1.0, abs_tol=1e-9):
            out.append("interest_distribution must have 5 entries summing to 1")
        if self.n_discussion_sessions and self.n_facilitators >= 1 and self.n_fellows >= 2:
            sizes = even_sizes(self.n_fellows, self.n_facilitators)
            lo, hi = SIZE_BOUNDS[SessionKind.DISCUSSION]
            if not (lo <= min(sizes) + 1 and max(sizes) + 1 <= hi):
                out.append(f"{self.n_fellows} fellows and {self.n_facilitators} facilitators give discussion "
                           f"groups of {min(sizes) + 1}-{max(sizes) + 1}, outside [{lo}, {hi}]")
        if self.n_smallgroup_sessions and self.n_fellows >= 2:
            try:
                small_group_sizes(self.n_fellows)
            except ValueError as exc:
                out.append(str(exc))
        if self.discussion_minutes <= 0 or self.smallgroup_minutes <= 0:
            out.append("session durations must be positive")
        if self.sessions_per_day < 1:
            out.append("sessions_per_day must be positive")
        return out


def small_group_sizes(n: int) -> tuple[int, ...]:
    """Split ``n`` fellows into groups of 4 and 3 (as many 4s as possible)."""
    g = math.ceil(n / 4)
    threes = 4 * g - n
    if threes > g or n < 3:
        raise ValueError(f"{n} fellows cannot be split into groups of 3-4")
    return (4,) * (g - threes) + (3,) * threes


def even_sizes(n: int, groups: int) -> tuple[int, ...]:
    base, extra = divmod(n, groups)
    return (base + 1,) * extra + (base,) * (groups - extra)


def _timetable(spec: SynthSpec) -> list[tuple[str, SessionKind, float, float]]:
    kinds = []
    d, s = spec.n_discussion_sessions, spec.n_smallgroup_sessions
    for i in range(max(d, s)):
        if i < d:
            kinds.append((f"D{i + 1}", SessionKind.DISCUSSION, spec.discussion_minutes))
        if i < s:
            kinds.append((f"SG{i + 1}", SessionKind.SMALL_GROUP, spec.smallgroup_minutes))
    out = []
    for k, (sid, kind, dur) in enumerate(kinds):
        day, slot = divmod(k, spec.sessions_per_day)
        if slot == 0:
            t = day * DAY + 60.0
        out.append((sid, kind, t, t + dur))
        t += dur + spec.break_minutes
    return out


def _solve(problem: AssignmentProblem, sweeps: int, seed: int) -> dict:
    if not problem.sessions:
        return {}
    sol = anneal(problem, AnnealSchedule(cooling=0.0, sweeps=sweeps), n_solutions=1, seed=seed)
    return sol[0].assignment


def generate_conference(spec: SynthSpec) -> Conference:
    """Timetable, participants, K0 and annealed groups; deterministic given the seed."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0]))
    width = max(3, len(str(spec.n_fellows)))
    fellows = [f"F{i + 1:0{width}d}" for i in range(spec.n_fellows)]
    facs = [f"X{i + 1:02d}" for i in range(spec.n_facilitators)]
    n_topics = spec.n_facilitators if spec.n_discussion_sessions else 0
    topics = [f"T{i + 1}" for i in range(n_topics)]

    participants = []
    for f in fellows:
        attrs = {a: f"{a[:3]}{rng.integers(n)}" for a, n in spec.attributes.items()}
        ratings = {t: int(rng.choice(5, p=spec.interest_distribution)) + 1 for t in topics}
        participants.append(Participant(f, Role.FELLOW, attrs, ratings or None))
    for x in facs:
        participants.append(Participant(x, Role.FACILITATOR, {}, None))

    k0 = {}
    draws = rng.choice(7, size=spec.n_fellows * (spec.n_fellows - 1) // 2, p=spec.k0_distribution)
    for (a, b), v in zip(itertools.combinations(fellows, 2), draws):
        if v:
            k0[(a, b)] = int(v)

    table = _timetable(spec)
    disc_slots, small_slots = [], []
    for sid, kind, _, _ in table:
        if kind is SessionKind.DISCUSSION:
            sizes = even_sizes(spec.n_fellows, spec.n_facilitators)
            disc_slots.append(SessionSlots(sid, sizes, tuple(frozenset([x]) for x in facs), tuple(topics)))
        else:
            sizes = small_group_sizes(spec.n_fellows)
            small_slots.append(SessionSlots(sid, sizes, tuple(frozenset() for _ in sizes)))

    attrs = {p.id: dict(p.attributes) for p in participants if p.role is Role.FELLOW}
    interests = {p.id: dict(p.topic_interests or {}) for p in participants if p.role is Role.FELLOW}
    assignment = {}
    for kind, slots, salt in ((SessionKind.DISCUSSION, disc_slots, 1), (SessionKind.SMALL_GROUP, small_slots, 2)):
        problem = AssignmentProblem(kind, fellows, slots, k0, attrs, interests, EnergyWeights())
        assignment.update(_solve(problem, spec.anneal_sweeps, spec.seed * 7919 + salt))

    topic_map = {s.session_id: s.topics for s in disc_slots}
    sessions = [
        Session(sid, kind, start, end, assignment[sid], topic_map.get(sid))
        for sid, kind, start, end in table
    ]
    last = max((s.end for s in sessions), default=60.0)
    return build_conference(participants, sessions, k0, (), 0.0, last + spec.collab_delay, spec.name)


def generate_outcomes(c: Conference, model, params: Sequence[float], seed: int,
                      probabilities: np.ndarray | None = None, merge_teams: bool = False) -> Conference:
    """Independent Bernoulli outcome per eligible pair; collaborators become 2-person teams.

    ``merge_teams`` turns a connected group of 3-4 collaborators in which every
    pair collaborated into one team; the set of collaborating pairs is unchanged.
    """
    table = pair_table(c.replace(proposal_teams=()))
    p = get_model(model).predict(params, table) if probabilities is None else np.asarray(probabilities)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    y = rng.random(len(p)) < p
    hits = [(pr.a, pr.b) for pr, hit in zip(table.pairs, y) if hit]
    if merge_teams:
        teams = _merged_teams(hits)
    else:
        teams = [frozenset(h) for h in hits]
    return c.replace(proposal_teams=tuple(ProposalTeam(t) for t in teams))


def _merged_teams(hits: list[tuple[str, str]]) -> list[frozenset[str]]:
    adj: dict[str, set[str]] = {}
    for a, b in hits:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    seen, out = set(), []
    for start in sorted(adj):
        if start in seen:
            continue
        comp, stack = set(), [start]
        while stack:
            v = stack.pop()
            if v not in comp:
                comp.add(v)
                stack.extend(adj[v] - comp)
        seen |= comp
        clique = all(len(adj[v]) == len(comp) - 1 for v in comp)
        if 3 <= len(comp) <= 4 and clique:
            out.append(frozenset(comp))
        else:
            out.extend(frozenset(h) for h in hits if h[0] in comp)
    return out


def synthetic_dataset(spec: SynthSpec, outcome_seed: int | None = None) -> Conference:
    """Conference plus outcomes drawn from the spec's generating model."""
    c = generate_conference(spec)
    seed = spec.seed if outcome_seed is None else outcome_seed
    return generate_outcomes(c, spec.model, spec.params, seed, merge_teams=spec.merge_teams)


def fig3_demo() -> Conference:
    """Three-session demo schedule: one small group, then two discussions a day apart."""
    ids = [f"F{i:02d}" for i in range(64)]
    sessions = [
        Session("SG1", SessionKind.SMALL_GROUP, 60, 90, (frozenset(ids[:4]),)),
        Session("D1", SessionKind.DISCUSSION, 150, 225, (frozenset(ids[:12]),)),
        Session("D2", SessionKind.DISCUSSION, 1500, 1575, (frozenset(ids[:12]),)),
    ]
    return build_conference([Participant(i) for i in ids], sessions, {}, (), 0.0, 1680.0, "fig3-demo")


#: parameters of the demo: (S, W, p_min, p_mem, p_max, i_c, i_max, a)
FIG3_NL_PARAMS = (0.5, 1.0, 0.1, 0.6, 0.9, 0.2, 0.6, 0.02)
FIG3_PAIR = ("F00", "F01")
