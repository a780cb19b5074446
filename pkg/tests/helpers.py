"""Shared builders for the test suite."""

from __future__ import annotations

import functools

import numpy as np

from catalysis.conference import Participant, Role, Session, SessionKind, build_conference
from catalysis.dynamics import LinearParams, linear_equilibrium
from catalysis.interaction import InteractionProfile
from catalysis.potential import CatalysisParams, branch_diagnostics
from catalysis.synth import SynthSpec, synthetic_dataset

FIG_S1 = CatalysisParams(S=1.0, W=1.0, p_min=0.1, p_mem=0.4, p_max=0.8, i_c=1.0, i_max=5.0)
FIG3 = CatalysisParams(0.5, 1.0, 0.1, 0.6, 0.9, 0.2, 0.6, 0.02)


def draw_params(rng: np.random.Generator) -> CatalysisParams:
    """One parameter set from a broad box, without the admissibility filter."""
    S, W = np.exp(rng.uniform(np.log(0.2), np.log(3.0), 2))
    p_min = rng.uniform(0.0, 0.3)
    p_mem = rng.uniform(p_min + 0.05, 0.85)
    p_max = rng.uniform(p_mem + 0.02, 1.0)
    i_max = np.exp(rng.uniform(np.log(0.5), np.log(5.0)))
    i_c = rng.uniform(0.05, 0.8) * i_max
    a = rng.uniform(0.0, 0.2)
    return CatalysisParams(S, W, p_min, p_mem, p_max, i_c, i_max, a)


def admissible_params(rng: np.random.Generator) -> CatalysisParams:
    """Rejection sampling against the branch-layout diagnostics."""
    while True:
        p = draw_params(rng)
        if not branch_diagnostics(p):
            return p


def fellows(n: int, prefix: str = "F") -> list[Participant]:
    return [Participant(f"{prefix}{i}") for i in range(n)]


def session(sid, start, end, *groups, kind=SessionKind.OTHER, topics=None) -> Session:
    return Session(sid, kind, start, end, tuple(frozenset(g) for g in groups), topics)


def tiny_conference(teams=(), k0=None, sessions=None, n=4, t_collab=300.0):
    """``n`` fellows F0.. plus one facilitator X; default: one 60-minute pair session."""
    parts = fellows(n) + [Participant("X", Role.FACILITATOR)]
    if sessions is None:
        sessions = [session("S1", 60, 120, {"F0", "F1"}, kind=SessionKind.SMALL_GROUP)]
    return build_conference(parts, sessions, k0 or {}, teams, 0.0, t_collab, "tiny")


@functools.lru_cache(maxsize=None)
def synthetic(seed: int = 0, **kw):
    """Cached synthetic conference with default nonlinear outcomes."""
    return synthetic_dataset(SynthSpec(seed=seed, **kw))


# closed forms for P_min=0, P_max=1, I_max=1, I_c=1/2


def simplest(W, pm, I, P):
    if P < 0.5 * pm * (1 - I):
        return W * ((P - 0.5 * I * pm) ** 2 - 0.25 * I * (pm + 2) * (3 * I * pm - 2 * I - 2 * pm))
    return W * (P - I - (1 - I) * pm) ** 2


def simplified_pint(pm, I):
    return -pm * ((I**2 - 2 * I + 7 / 8) * pm - I**2 + I) / (3 * I * pm - 2 * I - 2 * pm)


def simplified_icint(pm):
    # P_int = 0 reduces to (pm - 1) I^2 + (1 - 2 pm) I + 7 pm / 8 = 0
    roots = np.roots([pm - 1, 1 - 2 * pm, 7 * pm / 8])
    return min(r.real for r in roots if abs(r.imag) < 1e-12 and 0.5 < r.real <= 1)


def simplified(W, pm, I, P):
    upper = (P - I - (1 - I) * pm) ** 2
    high = pm + (1 - pm) * I
    tail = 2 * W * upper if P <= high else W * upper
    lower1 = 2 * W * ((P - 0.5 * I * pm) ** 2 + (-0.25 * pm**2 - pm + 1) * I**2 + I * pm + pm**2 / 8)
    if I <= 0.5:
        if P <= 0.5 * I * pm:
            return lower1
        if P <= 0.5 * (1 - I) * pm:
            return W * ((P - 0.5 * I * pm) ** 2 + (-0.5 * pm**2 - 2 * pm + 2) * I**2 + 2 * I * pm + pm**2 / 4)
        return tail
    if I <= simplified_icint(pm) and P <= simplified_pint(pm, I):
        return lower1
    return tail


LP = LinearParams(S=0.04, W=0.04, p_min=0.1, p_max=0.9, i_max=1.0)


def constant_profile(I, T=40.0):
    return InteractionProfile("a|b", np.array([0.0, T]), np.array([I]), 0.0, 0)


def exact_linear(params, I, t):
    x = I / params.i_max
    A = params.S * x / (1 - params.p_min / params.p_max)
    B = params.W * (1 - x)
    rate = (A + B) / params.p_max
    eq = linear_equilibrium(params, I)
    return eq + (params.p_min - eq) * np.exp(-rate * t)
