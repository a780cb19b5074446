import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from catalysis.conference import SessionKind
from catalysis.interaction import pair_table
from catalysis.model_selection import (
    SelectionRow,
    aic,
    cumulative_collaboration_curve,
    rank_rows,
    relative_likelihood,
    select,
)
from catalysis.models import get_model
from catalysis.synth import DEFAULT_NL_PARAMS, generate_outcomes
from helpers import session, synthetic, tiny_conference

REGRESSION_CHAIN = ("ConstantP", "LinearK0", "LinearItot", "LinearK0Itot")


def test_aic_arithmetic():
    assert aic(100.0, 3) == 206.0
    assert aic(0.0, 0) == 0.0


@pytest.mark.parametrize(
    "best, other, expected",
    [(375.88, 385.62, 0.0077), (337.02, 340.79, 0.15), (526.62, 541.64, 0.00055), (407.96, 430.53, 1.3e-05)],
)
def test_reported_relative_likelihoods(best, other, expected):
    value = relative_likelihood(other, best)
    assert float(f"{value:.2g}") == expected


@settings(max_examples=200)
@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=8), st.floats(-1e3, 1e3))
def test_ranking_properties(aics, shift):
    rows = rank_rows([SelectionRow(f"m{i}", 1, (a - 2) / 2, a) for i, a in enumerate(aics)])
    assert rows[0].relative_likelihood == 1.0 and rows[0].delta_aic == 0.0
    assert all(0 <= r.relative_likelihood <= 1 for r in rows)
    assert [r.aic for r in rows] == sorted(aics)
    shifted = rank_rows([SelectionRow(f"m{i}", 1, 0.0, a + shift) for i, a in enumerate(aics)])
    for a, b in zip(rows, shifted):
        assert a.relative_likelihood == pytest.approx(b.relative_likelihood, rel=1e-9, abs=1e-300)


def test_failed_row_sorted_last():
    rows = rank_rows([
        SelectionRow("bad", 2, math.nan, math.inf, error="FitError: boom"),
        SelectionRow("good", 1, 10.0, 22.0),
    ])
    assert [r.model for r in rows] == ["good", "bad"]
    assert math.isnan(rows[1].relative_likelihood)


def test_single_model():
    (row,) = select(synthetic(0), kinds=["ConstantP"])
    assert row.relative_likelihood == 1.0 and row.delta_aic == 0.0
    assert row.aic == pytest.approx(2 + 2 * row.nll)


def test_nested_models_never_worse():
    rows = {r.model: r for r in select(synthetic(1), kinds=REGRESSION_CHAIN)}
    nll = {k: r.nll for k, r in rows.items()}
    assert nll["LinearK0"] <= nll["ConstantP"] + 1e-6
    assert nll["LinearItot"] <= nll["ConstantP"] + 1e-6
    assert nll["LinearK0Itot"] <= min(nll["LinearK0"], nll["LinearItot"]) + 1e-6


def test_unknown_model_rejected():
    with pytest.raises(ValueError):
        select(synthetic(0), kinds=["Quadratic"])
    with pytest.raises(ValueError):
        select(synthetic(0), kinds=[])


# predictions -----------------------------------------------------------

def small_table():
    others = {f"F{i}" for i in range(2, 12)}
    sessions = [
        session("D1", 60, 135, {"F0", "F1", *others}, kind=SessionKind.DISCUSSION),
        session("SG1", 150, 180, {"F0", "F1", "F2", "F3"}, {"F4", "F5", "F6"}, kind=SessionKind.SMALL_GROUP),
    ]
    return pair_table(tiny_conference(sessions=sessions, k0={("F0", "F1"): 2}, n=12))


def test_regression_prediction_by_hand():
    table = small_table()
    row = [p.pair_id for p in table.pairs].index("F0|F1")
    p = get_model("LinearK0Itot").predict([0.01, 0.002, 0.01], table)
    assert p[row] == pytest.approx(0.01 * 2 + 0.002 * 27.5 + 0.01)
    assert p[row] == pytest.approx(0.085)


def test_regression_with_zero_slope_is_constant():
    table = small_table()
    assert np.allclose(get_model("LinearK0").predict([0.0, 0.3], table),
                       get_model("ConstantP").predict([0.3], table))


def test_threshold_above_every_session():
    table = small_table()
    top = table.max_session_term().max()
    p = get_model("Threshold").predict([top + 1.0, 0.6, 0.02], table)
    assert np.allclose(p, 0.02)


def test_wrong_parameter_count():
    with pytest.raises(ValueError):
        get_model("Threshold").predict([0.1, 0.2], small_table())


# cumulative curve --------------------------------------------------------

def test_zero_probability_band_is_zero():
    table = pair_table(synthetic(0))
    res = cumulative_collaboration_curve(table, "ConstantP", [0.0], probabilities=np.zeros(len(table)), n_sims=20)
    assert np.all(res.lower == 0) and np.all(res.upper == 0) and np.all(res.mean == 0)


def test_curve_of_observed_outcomes_has_no_residual():
    table = pair_table(synthetic(0))
    res = cumulative_collaboration_curve(table, "ConstantP", [0.0], probabilities=table.y.astype(float), n_sims=10)
    assert np.all(res.residuals == 0) and res.coverage == 1.0
    assert res.observed[-1] == table.n_collab
    assert np.all(np.diff(res.observed) >= 0)


def test_curve_band_covers_data_from_the_true_model():
    cover = [cumulative_collaboration_curve(synthetic(s), "NonlinearCatalysis", DEFAULT_NL_PARAMS, seed=s).coverage
             for s in range(10)]
    assert np.mean(cover) >= 0.93


def test_curve_reproducible():
    table = pair_table(synthetic(1))
    a = cumulative_collaboration_curve(table, "ConstantP", [0.1], n_sims=30, seed=4)
    b = cumulative_collaboration_curve(table, "ConstantP", [0.1], n_sims=30, seed=4)
    assert np.array_equal(a.lower, b.lower) and np.array_equal(a.upper, b.upper)
    assert np.all(a.lower <= a.upper)


def test_curve_lambda_zero_for_static_models():
    res = cumulative_collaboration_curve(synthetic(0), "ConstantP", [0.1], n_sims=5)
    assert res.lam == 0.0


# simulation oracles ---------------------------------------------------------

def test_constant_data_prefers_constant_model():
    # with the true model nested, 2 * (nll gain) ~ chi2(2): P(pick ConstantP) = 1 - exp(-2) ~ 0.865
    base = synthetic(0)
    wins = 0
    for r in range(50):
        c = generate_outcomes(base, "ConstantP", [0.05], seed=200 + r)
        rows = {row.model: row for row in select(c, kinds=["ConstantP", "LinearK0Itot"])}
        wins += rows["ConstantP"].aic <= rows["LinearK0Itot"].aic
    assert wins >= 35


@pytest.mark.slow
def test_threshold_data_prefers_threshold():
    base = synthetic(0)
    for r in range(3):
        c = generate_outcomes(base, "Threshold", [0.3, 0.3, 0.02], seed=100 + r)
        assert select(c)[0].model in ("Threshold", "NonlinearCatalysis")
