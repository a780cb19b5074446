import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catalysis.conference import Participant, SessionKind, build_conference, eligible_pairs
from catalysis.interaction import (
    i_tot_matrix,
    intensity_scale,
    interaction_profile,
    pair_table,
    session_effective_interaction,
    total_effective_interaction,
    total_interaction_axis,
)
from helpers import fellows, session, synthetic, tiny_conference


def test_session_effective_interaction_examples():
    assert session_effective_interaction(60, 2) == 60
    assert session_effective_interaction(45, 12) == 7.5
    assert session_effective_interaction(15, 4) == 7.5
    assert session_effective_interaction(75, 3) == 50


@pytest.mark.parametrize("T, N", [(0, 2), (-5, 3), (30, 1), (30, 0)])
def test_session_effective_interaction_domain(T, N):
    with pytest.raises(ValueError):
        session_effective_interaction(T, N)


def discussion_and_small_group():
    others = [f"F{i}" for i in range(2, 12)]
    sessions = [
        session("D1", 60, 135, {"F0", "F1", *others}, kind=SessionKind.DISCUSSION),
        session("SG1", 150, 180, {"F0", "F1", "F2", "F3"}, {"F4", "F5", "F6"}, kind=SessionKind.SMALL_GROUP),
    ]
    return tiny_conference(sessions=sessions, n=12)


def test_total_effective_interaction_hand_sum():
    c = discussion_and_small_group()
    assert total_effective_interaction(c, ("F0", "F1")) == pytest.approx(2 * 75 / 12 + 2 * 30 / 4)
    assert total_effective_interaction(c, ("F0", "F1")) == pytest.approx(27.5)


def test_no_shared_sessions_is_zero():
    c = discussion_and_small_group()
    assert total_effective_interaction(c, ("F0", "F11")) == pytest.approx(2 * 75 / 12)
    c = tiny_conference(n=4)
    assert total_effective_interaction(c, ("F2", "F3")) == 0.0


def test_parallel_groups_contribute_nothing():
    c = discussion_and_small_group()
    # F3 and F4 share D1 but sit in different SG1 groups
    assert total_effective_interaction(c, "F3|F4") == pytest.approx(2 * 75 / 12)
    prof = interaction_profile(c, ("F3", "F4"), a=0.0, i_max=1.0)
    assert prof.at(160) == 0.0


def test_unknown_pair():
    c = tiny_conference()
    with pytest.raises(KeyError):
        total_effective_interaction(c, ("F0", "nobody"))
    with pytest.raises(KeyError):
        interaction_profile(c, ("F0", "F0"), 0.0, 1.0)


def test_two_person_session_reaches_scaled_maximum():
    c = tiny_conference()
    for a in (0.0, 0.02, 0.3):
        prof = interaction_profile(c, ("F0", "F1"), a, i_max=0.7)
        assert prof.at(90) == pytest.approx(0.7 / (6 * a + 1))
    assert interaction_profile(c, ("F0", "F1"), 0.0, 0.7).at(90) == pytest.approx(0.7)


def test_full_prior_knowledge_gives_global_maximum():
    c = tiny_conference(k0={("F0", "F1"): 6})
    prof = interaction_profile(c, ("F0", "F1"), 0.02, i_max=1.3)
    assert prof.at(90) == pytest.approx(1.3 * (0.12 + 1) / 1.12)
    assert prof.at(90) == pytest.approx(1.3)
    assert prof.max_intensity() == pytest.approx(1.3)


def test_baseline_outside_sessions():
    parts = fellows(63) + [Participant("X")]
    sessions = [session("S1", 60, 120, {"F0", "F1"})]
    c = build_conference(parts, sessions, {}, (), 0.0, 300.0)
    a, i_max = 0.05, 0.9
    prof = interaction_profile(c, ("F2", "F3"), a, i_max)
    expected = i_max / (6 * a + 1) * (2 / 64)
    assert prof.at(10) == pytest.approx(expected)
    assert prof.at(200) == pytest.approx(expected)
    # busy in another group during the session
    assert interaction_profile(c, ("F0", "F2"), a, i_max).at(90) == 0.0
    assert prof.at(90) == pytest.approx(expected)


def test_profile_breakpoints_and_window():
    c = discussion_and_small_group()
    prof = interaction_profile(c, ("F0", "F1"), 0.1, 1.0)
    assert list(prof.times) == [0.0, 60.0, 135.0, 150.0, 180.0, 300.0]
    assert prof.t_start == 0.0 and prof.t_collab == 300.0
    assert prof.at(135) == prof.at(140)  # right-continuous
    with pytest.raises(ValueError):
        prof.at(301)
    assert prof.k0 == 0 and prof.pair == "F0|F1"


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2), st.floats(0, 1), st.floats(0.1, 5))
def test_profile_invariants(seed, a, i_max):
    c = synthetic(seed)
    scale = intensity_scale(a, i_max)
    for p in eligible_pairs(c)[::97]:
        prof = interaction_profile(c, p.key, a, i_max)
        assert prof.intensities.min() >= scale * a * p.k0 - 1e-12
        assert prof.intensities.max() <= i_max + 1e-12
        assert prof.i_tot == total_effective_interaction(c, p.key)


def test_session_integral_equals_i_tot():
    c = synthetic(0)
    session_time = np.zeros(0)
    for p in eligible_pairs(c)[::53]:
        prof = interaction_profile(c, p.key, a=0.0, i_max=1.0)
        mids = 0.5 * (prof.times[:-1] + prof.times[1:])
        in_session = np.array([any(s.start < m < s.end for s in c.sessions) for m in mids])
        widths = np.diff(prof.times)
        integral = float(np.sum(prof.intensities * widths * in_session))
        assert integral == pytest.approx(prof.i_tot, abs=1e-9)
        session_time = np.append(session_time, integral)
    assert session_time.max() > 0


def test_i_tot_independent_of_session_order_and_scaling():
    c = discussion_and_small_group()
    shuffled = c.replace(sessions=tuple(reversed(c.sessions)))
    for pair in [("F0", "F1"), ("F3", "F4"), ("F2", "F11")]:
        assert total_effective_interaction(c, pair) == total_effective_interaction(shuffled, pair)
    t1, t2 = pair_table(c), pair_table(c)
    assert np.array_equal(t1.i_tot, t2.i_tot)


def test_pair_table_matches_scalar_functions():
    c = synthetic(2)
    table = pair_table(c)
    assert len(table) == len(eligible_pairs(c))
    a, i_max = 0.05, 1.0
    full = table.intensities(a, i_max, unique=False)
    via_unique = table.intensities(a, i_max)[table.inverse]
    assert np.array_equal(full, via_unique)
    for row in range(0, len(table), 61):
        p = table.pairs[row]
        prof = interaction_profile(c, p.key, a, i_max)
        assert np.allclose(prof.times, table.edges)
        assert np.allclose(prof.intensities, full[row])
        assert table.i_tot[row] == pytest.approx(total_effective_interaction(c, p.key))
    assert np.allclose(i_tot_matrix(c, [p.key for p in table.pairs]), table.i_tot)
    axis = total_interaction_axis(table, 2.0)
    assert np.allclose(axis, table.i_tot + 2.0 * table.k0)
    sub = table.subset(table.y)
    assert len(sub) == table.n_collab and sub.y.all()
