"""Conference data model: participants, timed sessions, prior knowledge, outcomes.

A conference file is a JSON document (see ``docs/conference_schema.md``)::

    {
      "schema_version": 1,
      "t_start": 0, "t_collab": 2940,
      "participants": [{"id": "F01", "role": "Fellow", "attributes": {...},
                        "topic_interests": {"T1": 4}}, ...],
      "sessions": [{"id": "D1", "kind": "Discussion", "start": 60, "end": 135,
                    "groups": [["F01", "F02", ...], ...],
                    "group_topics": ["T1", ...]}, ...],
      "prior_knowledge": [["F01", "F02", 3], ...],
      "proposal_teams": [{"members": ["F01", "F02"], "funded": false}, ...]
    }
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

SCHEMA_VERSION = 1

#: Pairs with prior knowledge at or above this value are dropped before fitting.
K0_EXCLUDE = 5
K0_MAX = 6


class ConferenceError(Exception):
    """Base class for conference ingestion errors."""


class ConferenceParseError(ConferenceError):
    pass


class ConferenceValidationError(ConferenceError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid conference:\n  " + "\n  ".join(self.violations))


class Role(str, enum.Enum):
    FELLOW = "Fellow"
    FACILITATOR = "Facilitator"


class SessionKind(str, enum.Enum):
    DISCUSSION = "Discussion"
    SMALL_GROUP = "SmallGroup"
    OTHER = "Other"


def pair_key(a: str, b: str) -> tuple[str, str]:
    """Canonical (sorted) key for an unordered pair."""
    return (a, b) if a <= b else (b, a)


def pair_id(a: str, b: str) -> str:
    x, y = pair_key(a, b)
    return f"{x}|{y}"


@dataclass(frozen=True)
class Participant:
    id: str
    role: Role = Role.FELLOW
    attributes: Mapping[str, str] = field(default_factory=dict)
    topic_interests: Mapping[str, int] | None = None

    @property
    def is_fellow(self) -> bool:
        return self.role is Role.FELLOW


@dataclass(frozen=True)
class Session:
    id: str
    kind: SessionKind
    start: float
    end: float
    groups: tuple[frozenset[str], ...] = ()
    #: Optional topic id per group (discussion sessions).
    group_topics: tuple[str | None, ...] | None = None

    @property
    def duration(self) -> float:
        return self.end - self.start

    def group_of(self, pid: str) -> int | None:
        for i, g in enumerate(self.groups):
            if pid in g:
                return i
        return None

    def attendees(self) -> frozenset[str]:
        return frozenset().union(*self.groups) if self.groups else frozenset()


class PriorKnowledgeMatrix:
    """Symmetric pairwise K0 scores; missing pairs read as 0."""

    def __init__(self, entries: Mapping[tuple[str, str], int] | None = None):
        self._k: dict[tuple[str, str], int] = {}
        for (a, b), k in (entries or {}).items():
            self._k[pair_key(a, b)] = int(k)

    def get(self, a: str, b: str) -> int:
        return self._k.get(pair_key(a, b), 0)

    __call__ = get

    def items(self):
        return self._k.items()

    def __len__(self) -> int:
        return len(self._k)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PriorKnowledgeMatrix) and self._k == other._k


@dataclass(frozen=True)
class ProposalTeam:
    members: frozenset[str]
    funded: bool = False


@dataclass(frozen=True)
class PairOutcome:
    a: str
    b: str
    collaborated: bool
    k0: int

    @property
    def pair_id(self) -> str:
        return pair_id(self.a, self.b)

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Conference:
    participants: tuple[Participant, ...]
    sessions: tuple[Session, ...]
    prior_knowledge: PriorKnowledgeMatrix
    proposal_teams: tuple[ProposalTeam, ...]
    t_start: float
    t_collab: float
    name: str = ""

    @property
    def n_tot(self) -> int:
        return len(self.participants)

    @property
    def fellows(self) -> list[str]:
        return [p.id for p in self.participants if p.is_fellow]

    def participant(self, pid: str) -> Participant:
        for p in self.participants:
            if p.id == pid:
                return p
        raise KeyError(pid)

    def collaborated(self, a: str, b: str) -> bool:
        return any(a in t.members and b in t.members for t in self.proposal_teams)

    def replace(self, **changes: Any) -> "Conference":
        return dataclasses.replace(self, **changes)


def eligible_pairs(c: Conference) -> list[PairOutcome]:
    """All fellow-fellow pairs with K0 below the exclusion level, sorted by pair id."""
    collab: set[tuple[str, str]] = set()
    for team in c.proposal_teams:
        for a, b in itertools.combinations(sorted(team.members), 2):
            collab.add((a, b))
    out = []
    for a, b in itertools.combinations(sorted(c.fellows), 2):
        k0 = c.prior_knowledge.get(a, b)
        if k0 >= K0_EXCLUDE:
            continue
        out.append(PairOutcome(a, b, (a, b) in collab, k0))
    return out


def validate(c: Conference) -> list[str]:
    """Return a description of every violated invariant (empty if valid)."""
    v: list[str] = []
    ids = [p.id for p in c.participants]
    seen: set[str] = set()
    for pid in ids:
        if pid in seen:
            v.append(f"participant id {pid!r} is duplicated")
        seen.add(pid)
    known = set(ids)
    fellows = {p.id for p in c.participants if p.is_fellow}

    for p in c.participants:
        for topic, score in (p.topic_interests or {}).items():
            if not (isinstance(score, int) and 1 <= score <= 5):
                v.append(f"participant {p.id!r}: topic interest {topic!r}={score!r} outside 1..5")

    for s in c.sessions:
        if not s.end > s.start:
            v.append(f"session {s.id!r}: end {s.end} is not after start {s.start}")
        owner: dict[str, int] = {}
        for gi, g in enumerate(s.groups):
            for m in sorted(g):
                if m not in known:
                    v.append(f"session {s.id!r} group {gi}: member {m!r} is not a participant")
                if m in owner:
                    v.append(
                        f"session {s.id!r}: groups {owner[m]} and {gi} overlap on {m!r}"
                    )
                else:
                    owner[m] = gi
        if s.group_topics is not None and len(s.group_topics) != len(s.groups):
            v.append(f"session {s.id!r}: group_topics length does not match groups")

    starts = [s.start for s in c.sessions]
    if starts != sorted(starts):
        v.append("sessions are not ordered by start time")
    if c.sessions:
        first = min(s.start for s in c.sessions)
        last = max(s.end for s in c.sessions)
        if c.t_start > first:
            v.append(f"t_start {c.t_start} is after first session start {first}")
        if c.t_collab < last:
            v.append(f"t_collab {c.t_collab} is before last session end {last}")
    if c.t_collab < c.t_start:
        v.append(f"t_collab {c.t_collab} precedes t_start {c.t_start}")

    for (a, b), k in c.prior_knowledge.items():
        if a == b:
            v.append(f"prior_knowledge: self-pair {a!r}")
        if not (0 <= k <= K0_MAX):
            v.append(f"prior_knowledge: K0 for {a!r},{b!r} = {k} outside 0..{K0_MAX}")
        for x in (a, b):
            if x not in known:
                v.append(f"prior_knowledge: {x!r} is not a participant")

    for i, t in enumerate(c.proposal_teams):
        if not 2 <= len(t.members) <= 4:
            v.append(f"proposal team {i}: size {len(t.members)} outside 2..4")
        for m in sorted(t.members):
            if m not in fellows:
                v.append(f"proposal team {i}: member {m!r} is not a fellow")
    return v


# --------------------------------------------------------------------------
# serialization

def _num(x: Any, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ConferenceParseError(f"{what}: expected a finite number, got {x!r}")
    return x


def from_dict(doc: Mapping[str, Any]) -> Conference:
    """Build a Conference from a parsed document without validating invariants."""
    if not isinstance(doc, Mapping):
        raise ConferenceParseError("conference document must be an object")
    if "schema_version" not in doc:
        raise ConferenceParseError("missing schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConferenceParseError(f"unsupported schema_version {doc['schema_version']!r}")
    for key in ("participants", "sessions", "t_start", "t_collab"):
        if key not in doc:
            raise ConferenceParseError(f"missing key {key!r}")
    try:
        participants = tuple(
            Participant(
                id=str(p["id"]),
                role=Role(p.get("role", "Fellow")),
                attributes=dict(p.get("attributes") or {}),
                topic_interests=(
                    dict(p["topic_interests"]) if p.get("topic_interests") is not None else None
                ),
            )
            for p in doc["participants"]
        )
        sessions = sorted(
            (Session(
                id=str(s["id"]),
                kind=SessionKind(s.get("kind", "Other")),
                start=_num(s["start"], f"session {s.get('id')} start"),
                end=_num(s["end"], f"session {s.get('id')} end"),
                groups=tuple(frozenset(map(str, g)) for g in s.get("groups", [])),
                group_topics=(
                    tuple(s["group_topics"]) if s.get("group_topics") is not None else None
                ),
            )
            for s in doc["sessions"]),
            key=lambda s: (s.start, s.id),
        )
        pk: dict[tuple[str, str], int] = {}
        for row in doc.get("prior_knowledge", []):
            a, b, k = row
            if isinstance(k, bool) or not isinstance(k, int):
                raise ConferenceParseError(f"prior_knowledge {a},{b}: K0 must be an integer")
            pk[pair_key(str(a), str(b))] = k
        teams = tuple(
            ProposalTeam(frozenset(map(str, t["members"])), bool(t.get("funded", False)))
            for t in doc.get("proposal_teams", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConferenceParseError):
            raise
        raise ConferenceParseError(f"malformed conference document: {exc!r}") from exc
    return Conference(
        participants=participants,
        sessions=tuple(sessions),
        prior_knowledge=PriorKnowledgeMatrix(pk),
        proposal_teams=teams,
        t_start=_num(doc["t_start"], "t_start"),
        t_collab=_num(doc["t_collab"], "t_collab"),
        name=str(doc.get("name", "")),
    )


def to_dict(c: Conference) -> dict[str, Any]:
    parts = []
    for p in c.participants:
        d: dict[str, Any] = {"id": p.id, "role": p.role.value, "attributes": dict(p.attributes)}
        if p.topic_interests is not None:
            d["topic_interests"] = dict(p.topic_interests)
        parts.append(d)
    sessions = []
    for s in c.sessions:
        d = {
            "id": s.id,
            "kind": s.kind.value,
            "start": s.start,
            "end": s.end,
            "groups": [sorted(g) for g in s.groups],
        }
        if s.group_topics is not None:
            d["group_topics"] = list(s.group_topics)
        sessions.append(d)
    return {
        "schema_version": SCHEMA_VERSION,
        "name": c.name,
        "t_start": c.t_start,
        "t_collab": c.t_collab,
        "participants": parts,
        "sessions": sessions,
        "prior_knowledge": [[a, b, k] for (a, b), k in sorted(c.prior_knowledge.items())],
        "proposal_teams": [
            {"members": sorted(t.members), "funded": t.funded} for t in c.proposal_teams
        ],
    }


def load_conference(path: str | Path) -> Conference:
    """Read and validate a conference file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConferenceParseError(f"{path}: {exc}") from exc
    c = from_dict(doc)
    violations = validate(c)
    if violations:
        raise ConferenceValidationError(violations)
    return c


def save_conference(c: Conference, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(c), indent=1, sort_keys=False) + "\n")


def build_conference(
    participants: Iterable[Participant],
    sessions: Iterable[Session],
    prior_knowledge: Mapping[tuple[str, str], int] | None = None,
    proposal_teams: Iterable[ProposalTeam | Iterable[str]] = (),
    t_start: float = 0.0,
    t_collab: float | None = None,
    name: str = "",
) -> Conference:
    """Convenience constructor; sorts sessions by start and infers t_collab."""
    sessions = tuple(sorted(sessions, key=lambda s: (s.start, s.id)))
    teams = tuple(
        t if isinstance(t, ProposalTeam) else ProposalTeam(frozenset(t)) for t in proposal_teams
    )
    if t_collab is None:
        t_collab = max((s.end for s in sessions), default=t_start)
    return Conference(
        participants=tuple(participants),
        sessions=sessions,
        prior_knowledge=PriorKnowledgeMatrix(prior_knowledge),
        proposal_teams=teams,
        t_start=t_start,
        t_collab=t_collab,
        name=name,
    )
