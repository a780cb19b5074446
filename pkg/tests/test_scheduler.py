import itertools
import math

import numpy as np
import pytest

from catalysis.conference import Participant, SessionKind, build_conference, eligible_pairs
from catalysis.interaction import total_effective_interaction
from catalysis.scheduler import (
    AnnealError,
    AnnealSchedule,
    AssignmentProblem,
    EnergyWeights,
    ScheduleSolution,
    SessionSlots,
    anneal,
    apply_assignment,
    canonical,
    counterfactual_analysis,
    energy,
    load_solutions,
    save_solutions,
)
from helpers import session, synthetic

# cooling derived from the sweep count, so short runs still end cold
QUICK = AnnealSchedule(cooling=0.0, sweeps=100)


def rotation_problem(**kw):
    slots = tuple(SessionSlots(f"S{i}", (2, 2), (frozenset(), frozenset())) for i in range(2))
    return AssignmentProblem(SessionKind.SMALL_GROUP, ("a", "b", "c", "d"), slots, enforce_bounds=False, **kw)


def pairings(fellows):
    first, rest = fellows[0], fellows[1:]
    for mate in rest:
        yield (frozenset({first, mate}), frozenset(set(rest) - {mate}))


def test_anneal_matches_brute_force():
    problem = rotation_problem()
    every = [{"S0": p, "S1": q} for p, q in itertools.product(pairings("abcd"), repeat=2)]
    assert len(every) == 9
    energies = [energy(a, problem) for a in every]
    best = min(energies)
    assert best == 0.0
    assert sorted(energies).count(0.0) == 6
    (sol,) = anneal(problem, QUICK, seed=1)
    assert sol.energy == best == energy(sol, problem)
    s0, s1 = (set(sol.assignment[s]) for s in ("S0", "S1"))
    assert not s0 & s1


def test_anneal_returns_ranked_distinct_solutions():
    # every chain ends in one of the six perfect rotations, so at most six come back
    sols = anneal(rotation_problem(), QUICK, n_solutions=9, seed=0, max_chains=200)
    keys = [s.key() for s in sols]
    assert len(set(keys)) == len(keys) == 6
    assert [s.rank for s in sols] == list(range(6))
    assert all(a.energy <= b.energy for a, b in zip(sols, sols[1:]))


def test_anneal_deterministic_and_parallel_safe():
    problem = AssignmentProblem.from_conference(synthetic(0), SessionKind.SMALL_GROUP)
    a = anneal(problem, QUICK, n_solutions=3, seed=5)
    b = anneal(problem, QUICK, n_solutions=3, seed=5)
    c = anneal(problem, QUICK, n_solutions=3, seed=5, workers=2)
    assert [s.key() for s in a] == [s.key() for s in b] == [s.key() for s in c]
    assert [s.energy for s in a] == [s.energy for s in c]


def test_repeat_pairing_penalized():
    problem = rotation_problem()
    same = {"S0": (frozenset("ab"), frozenset("cd")), "S1": (frozenset("ab"), frozenset("cd"))}
    assert energy(same, problem) == 2 * problem.weights.repeat_small


def test_homogeneous_group_penalty():
    fellows = tuple(f"F{i}" for i in range(8))
    attrs = {f: {"discipline": "bio" if i < 4 else "phys"} for i, f in enumerate(fellows)}
    slots = (SessionSlots("S", (4, 4), (frozenset(), frozenset())),)
    problem = AssignmentProblem(SessionKind.SMALL_GROUP, fellows, slots, attributes=attrs,
                                weights=EnergyWeights(homogeneity=2.0))
    split = {"S": (frozenset(fellows[:4]), frozenset(fellows[4:]))}
    # each all-same group of 4 contributes C(4, 2) pairs
    assert energy(split, problem) == 2.0 * 2 * math.comb(4, 2)
    mixed = {"S": (frozenset(fellows[::2]), frozenset(fellows[1::2]))}
    assert energy(mixed, problem) == 2.0 * 4 * math.comb(2, 2)


def test_prior_knowledge_penalty_small_groups_only():
    k0 = {("a", "b"): 2}
    problem = rotation_problem(k0=k0)
    sol = {"S0": (frozenset("ab"), frozenset("cd")), "S1": (frozenset("ac"), frozenset("bd"))}
    assert energy(sol, problem) == problem.weights.prior_knowledge
    fellows = tuple("abcdefgh")
    slots = (SessionSlots("D", (8,), (frozenset(),)),)
    disc = AssignmentProblem(SessionKind.DISCUSSION, fellows, slots, k0=k0)
    assert energy({"D": (frozenset(fellows),)}, disc) == 0.0


def discussion_problem(ratings):
    fellows = tuple(f"F{i}" for i in range(16))
    slots = (SessionSlots("D", (8, 8), (frozenset(), frozenset()), ("T1", "T2")),)
    interests = {f: {"T1": r1, "T2": r2} for f, (r1, r2) in zip(fellows, ratings)}
    return fellows, AssignmentProblem(SessionKind.DISCUSSION, fellows, slots, interests=interests)


def test_low_interest_is_hard_and_high_interest_rewarded():
    fellows, problem = discussion_problem([(5, 3)] * 8 + [(3, 3)] * 8)
    good = {"D": (frozenset(fellows[:8]), frozenset(fellows[8:]))}
    assert energy(good, problem) == -8 * problem.weights.interest_reward
    fellows, problem = discussion_problem([(2, 3)] + [(3, 3)] * 15)
    bad = {"D": (frozenset(fellows[:8]), frozenset(fellows[8:]))}
    assert energy(bad, problem) == math.inf
    sols = anneal(problem, QUICK, n_solutions=2, seed=0)
    for s in sols:
        assert "F0" in s.assignment["D"][1] and math.isfinite(s.energy)


def test_unsatisfiable_hard_rules():
    _, problem = discussion_problem([(1, 1)] + [(3, 3)] * 15)
    with pytest.raises(AnnealError):
        anneal(problem, AnnealSchedule(sweeps=20), seed=0, max_chains=2)


@pytest.mark.parametrize("mutate", [
    lambda a: {"S0": a["S0"]},                                       # missing session
    lambda a: {**a, "S1": (frozenset("abc"), frozenset("d"))},       # wrong sizes
    lambda a: {**a, "S1": (frozenset("ab"), frozenset("ad"))},       # fellow twice, c missing
    lambda a: {**a, "S1": (frozenset("ab"), frozenset({"c", "z"}))},  # stranger
])
def test_structural_violations_are_infinite(mutate):
    ok = {"S0": (frozenset("ab"), frozenset("cd")), "S1": (frozenset("ac"), frozenset("bd"))}
    assert energy(mutate(ok), rotation_problem()) == math.inf


def test_infeasible_sizes_rejected():
    with pytest.raises(ValueError, match="fellow slots"):
        AssignmentProblem(SessionKind.SMALL_GROUP, ("a", "b", "c"),
                          (SessionSlots("S", (2, 2), (frozenset(), frozenset())),), enforce_bounds=False)
    with pytest.raises(ValueError, match="outside"):
        AssignmentProblem(SessionKind.SMALL_GROUP, ("a", "b", "c", "d"),
                          (SessionSlots("S", (2, 2), (frozenset(), frozenset())),))


def test_from_conference_keeps_fixed_members():
    c = synthetic(0)
    problem = AssignmentProblem.from_conference(c, SessionKind.DISCUSSION)
    sessions = {s.id: s for s in c.sessions}
    for slot in problem.sessions:
        actual = sessions[slot.session_id].groups
        assert slot.group_sizes == tuple(len(g) for g in actual)
        assert all(f <= g for f, g in zip(slot.fixed, actual))
        assert all(not (f & set(c.fellows)) for f in slot.fixed)
    # the real schedule is itself a valid assignment
    actual = {s.session_id: sessions[s.session_id].groups for s in problem.sessions}
    assert math.isfinite(energy(actual, problem))


def test_solutions_round_trip(tmp_path):
    sols = anneal(rotation_problem(), QUICK, n_solutions=3, seed=0)
    save_solutions(sols, tmp_path / "s.json", {"kind": "SmallGroup"})
    back = load_solutions(tmp_path / "s.json")
    assert [s.key() for s in back] == [s.key() for s in sols]
    assert [s.energy for s in back] == [s.energy for s in sols]


# counterfactual analysis -------------------------------------------------------

def actual_solution(c, kind):
    return ScheduleSolution({s.id: s.groups for s in c.sessions if s.kind is kind}, 0.0)


def test_identical_counterfactuals():
    c = synthetic(0)
    d, s = actual_solution(c, SessionKind.DISCUSSION), actual_solution(c, SessionKind.SMALL_GROUP)
    rep = counterfactual_analysis(c, [d, d], [s])
    assert np.all(rep.differences == 0)
    assert rep.wilcoxon is None and rep.fraction_actual_greater == 0.0
    assert rep.shares_small_groups.all() and len(rep.i_bar_cf) == 2


def test_swap_without_collaborators_changes_nothing():
    c = synthetic(0)
    collab = {x for p in eligible_pairs(c) if p.collaborated for x in p.key}
    sg = actual_solution(c, SessionKind.SMALL_GROUP)
    sid, groups = next(iter(sg.assignment.items()))
    # swap two non-collaborators sitting in different groups
    lonely = [(gi, f) for gi, g in enumerate(groups) for f in g if f not in collab and f in c.fellows]
    (g1, f1), (g2, f2) = next((a, b) for a, b in itertools.combinations(lonely, 2) if a[0] != b[0])
    new = list(groups)
    new[g1] = groups[g1] - {f1} | {f2}
    new[g2] = groups[g2] - {f2} | {f1}
    swapped = ScheduleSolution({**sg.assignment, sid: tuple(new)}, 0.0)
    rep = counterfactual_analysis(c, [actual_solution(c, SessionKind.DISCUSSION)], [swapped])
    assert rep.differences[0] == 0.0 and not rep.shares_small_groups[0]


def test_counterfactual_agrees_with_rebuilt_conference():
    c = synthetic(1)
    d_sols = anneal(AssignmentProblem.from_conference(c, SessionKind.DISCUSSION), QUICK, n_solutions=2, seed=0)
    s_sols = anneal(AssignmentProblem.from_conference(c, SessionKind.SMALL_GROUP), QUICK, n_solutions=2, seed=0)
    rep = counterfactual_analysis(c, d_sols, s_sols)
    pairs = [p.key for p in eligible_pairs(c) if p.collaborated]
    assert rep.i_bar_actual == pytest.approx(np.mean([total_effective_interaction(c, p) for p in pairs]))
    for k, (i, j) in enumerate(rep.combos):
        alt = apply_assignment(c, {**d_sols[i].assignment, **s_sols[j].assignment})
        expect = np.mean([total_effective_interaction(alt, p) for p in pairs])
        assert rep.i_bar_cf[k] == pytest.approx(expect, rel=1e-12)
    assert len(rep.rows()) == 4


def test_counterfactual_requires_collaborations():
    parts = [Participant(f"F{i}") for i in range(4)]
    c = build_conference(parts, [session("S1", 0, 30, {"F0", "F1"}, {"F2", "F3"}, kind=SessionKind.SMALL_GROUP)],
                         {}, (), 0.0, 100.0)
    with pytest.raises(ValueError):
        counterfactual_analysis(c, [actual_solution(c, SessionKind.DISCUSSION)],
                                [actual_solution(c, SessionKind.SMALL_GROUP)])


def test_canonical_ignores_group_order():
    a = {"S": (frozenset("ab"), frozenset("cd"))}
    b = {"S": (frozenset("dc"), frozenset("ba"))}
    assert canonical(a) == canonical(b)
