"""Collaboration-probability dynamics along an interaction profile.

Linear model (bounded form)::

    dP/dt = S (I/I_max) (1 - P/P_max) / (1 - P_min/P_max)
            - W ((P - P_min)/P_max) (1 - I/I_max)

The weakening term is written with ``P - P_min`` so that the model relaxes to
``P_min`` once interaction stops; ``printed=True`` selects ``P - P_max``
instead.  Nonlinear model: ``dP/dt = -dV/dP`` with the catalysis potential.

Integration is classic fixed-step RK4, with the step shortened to land on every
profile breakpoint and the state clamped to [0, 1] after each step.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from . import _kernels
from .conference import Conference
from .interaction import InteractionProfile, PairTable, interaction_profile
from .potential import CatalysisParams, DomainError, compute_i_cint, gradient_unchecked

DEFAULT_STEP = 0.5
PROB_EPS = 1e-9


class IntegrationError(FloatingPointError):
    pass


class UnstableStepError(IntegrationError):
    pass


class DynamicsModel(str, enum.Enum):
    LINEAR = "Linear"
    NONLINEAR = "Nonlinear"


@dataclass(frozen=True)
class LinearParams:
    S: float
    W: float
    p_min: float
    p_max: float
    i_max: float
    a: float = 0.0

    def __post_init__(self):
        if not 0 <= self.p_min < self.p_max <= 1:
            raise ValueError("need 0 <= p_min < p_max <= 1")
        if not (self.S > 0 and self.W > 0):
            raise ValueError("need S > 0 and W > 0")
        if not (self.i_max > 0 and self.a >= 0):
            raise ValueError("need i_max > 0 and a >= 0")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    probabilities: np.ndarray
    p_collab: float
    clamp_events: int = 0


def rhs_linear(params: LinearParams, I: float, P: float, printed: bool = False) -> float:
    x = I / params.i_max
    ref = params.p_max if printed else params.p_min
    grow = params.S * x * (1.0 - P / params.p_max) / (1.0 - params.p_min / params.p_max)
    return grow - params.W * ((P - ref) / params.p_max) * (1.0 - x)


def rhs_nonlinear(params: CatalysisParams, I: float, P: float) -> float:
    if not 0.0 <= I <= params.i_max:
        raise DomainError(f"I={I} outside [0, i_max]")
    return -gradient_unchecked(params, I, P)


def linear_equilibrium(params: LinearParams, I: float) -> float:
    """Fixed point of the linear model at constant ``I``."""
    x = I / params.i_max
    A = params.S * x / (1.0 - params.p_min / params.p_max)
    B = params.W * (1.0 - x)
    # A (1 - P/Pmax) = B (P - Pmin)/Pmax
    return (A + B * params.p_min / params.p_max) / ((A + B) / params.p_max)


def linear_potential(params: LinearParams, I: float, P):
    """Quadratic potential whose negative derivative is :func:`rhs_linear`."""
    x = I / params.i_max
    A = params.S * x / (1.0 - params.p_min / params.p_max)
    B = params.W * (1.0 - x)
    c0 = A + B * params.p_min / params.p_max   # rhs = c0 - c1 P
    c1 = (A + B) / params.p_max
    P = np.asarray(P, dtype=float)
    return -c0 * P + 0.5 * c1 * P**2, -(c0 - c1 * P)


def _step_plan(dt: float, h: float) -> tuple[int, float]:
    return _kernels.step_plan(dt, h)


def integrate(
    rhs: Callable[[float, float], float],
    profile: InteractionProfile,
    p0: float,
    step_h: float = DEFAULT_STEP,
) -> Trajectory:
    """RK4 along ``profile`` with ``rhs(I, P)``; records every step."""
    if not step_h > 0:
        raise ValueError("step_h must be positive")
    P = float(p0)
    t = profile.t_start
    times = [t]
    probs = [P]
    clamps = 0

    def step(P, I, h):
        k1 = rhs(I, P)
        k2 = rhs(I, P + 0.5 * h * k1)
        k3 = rhs(I, P + 0.5 * h * k2)
        k4 = rhs(I, P + h * k3)
        return P + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    for j, I in enumerate(profile.intensities):
        t0, t1 = float(profile.times[j]), float(profile.times[j + 1])
        n, rem = _step_plan(t1 - t0, step_h)
        hs = [step_h] * n + ([rem] if rem > 0 else [])
        for k, h in enumerate(hs):
            Pn = step(P, float(I), h)
            if not math.isfinite(Pn):
                raise IntegrationError(
                    f"non-finite state at t={t0 + k * step_h:g} (I={I:g}, P={P:g})"
                )
            if Pn < 0.0 or Pn > 1.0:
                clamps += 1
                Pn = min(max(Pn, 0.0), 1.0)
            P = Pn
            times.append(t0 + k * step_h + h)
            probs.append(P)
        if hs:
            times[-1] = t1
    return Trajectory(np.array(times), np.array(probs), P, clamps)


def model_rhs(model: DynamicsModel, params, printed: bool = False):
    if DynamicsModel(model) is DynamicsModel.LINEAR:
        return functools.partial(rhs_linear, params, printed=printed)
    return functools.partial(rhs_nonlinear, params)


def _kernel_args(model: DynamicsModel, params, printed: bool):
    if DynamicsModel(model) is DynamicsModel.LINEAR:
        code = _kernels.LINEAR_PRINTED if printed else _kernels.LINEAR
        prm = np.array([params.S, params.W, params.p_min, params.p_max, params.i_max])
        return code, prm, 0.0
    prm = np.array([params.S, params.W, params.p_min, params.p_mem, params.p_max,
                    params.i_c, params.i_max])
    return _kernels.NONLINEAR, prm, compute_i_cint(params)


def final_probabilities(
    model: DynamicsModel,
    params,
    edges: np.ndarray,
    intensities: np.ndarray,
    step_h: float = DEFAULT_STEP,
    printed: bool = False,
    fast: bool = True,
    strict: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Unclipped ``P(t_collab)`` for each intensity row, starting from ``p_min``.

    Returns ``(p, clamp_events)``.  ``fast`` applies runs of RK4 steps that stay
    in one quadratic branch in closed form; ``fast=False`` steps explicitly.
    ``strict`` raises :class:`UnstableStepError` as soon as a full step is taken
    in a branch whose RK4 amplification factor has ``|R| >= 1`` or the state is
    clamped; both mean ``step_h`` is beyond the stability limit for the rates.
    """
    code, prm, i_cint = _kernel_args(model, params, printed)
    p, clamps = _kernels.integrate_final(
        np.ascontiguousarray(edges, dtype=float),
        np.ascontiguousarray(intensities, dtype=float).reshape(len(intensities), len(edges) - 1),
        code, prm, i_cint, float(params.p_min), float(step_h), fast, strict,
    )
    if np.isnan(p).any():
        bad = int(np.flatnonzero(np.isnan(p))[0])
        if strict:
            raise UnstableStepError(f"step-unstable integration on profile row {bad}")
        raise IntegrationError(f"non-finite state while integrating profile row {bad}")
    return p, clamps


def table_probabilities(
    model: DynamicsModel,
    params,
    table: PairTable,
    step_h: float = DEFAULT_STEP,
    printed: bool = False,
    eps: float = PROB_EPS,
    strict: bool = False,
) -> np.ndarray:
    """Clipped per-pair ``P(t_collab)`` for every pair in ``table``."""
    intens = table.intensities(params.a, params.i_max, unique=True)
    p, _ = final_probabilities(model, params, table.edges, intens, step_h, printed, strict=strict)
    return np.clip(p[table.inverse], eps, 1.0 - eps)


def collaboration_probability(
    model: DynamicsModel,
    params,
    c: Conference,
    pair,
    step_h: float = DEFAULT_STEP,
    printed: bool = False,
) -> float:
    """Probability at ``t_collab`` for one pair, clipped to [1e-9, 1 - 1e-9]."""
    prof = interaction_profile(c, pair, params.a, params.i_max)
    p, _ = final_probabilities(model, params, prof.times, prof.intensities[None, :], step_h, printed)
    return float(np.clip(p[0], PROB_EPS, 1.0 - PROB_EPS))


def trajectory(
    model: DynamicsModel,
    params,
    c: Conference,
    pair,
    step_h: float = DEFAULT_STEP,
    printed: bool = False,
) -> Trajectory:
    prof = interaction_profile(c, pair, params.a, params.i_max)
    return integrate(model_rhs(model, params, printed), prof, params.p_min, step_h)
