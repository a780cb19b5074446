"""Piecewise-quadratic double-well potential of the nonlinear catalysis model.

For intensity ``I`` the potential ``V(P; I)`` has

* a lower well centred at ``p_low`` (curvature ``S`` to the left, ``W`` to the
  right) and an upper well centred at ``p_high`` (``S`` left, ``W`` right);
* a barrier at ``p_med`` that meets the lower minimum at ``I = i_c``;
* above ``i_c`` a single well, where the lower parabola survives to the left
  of the crossing point ``p_int`` until ``I`` reaches ``i_cint``.

All values carry the ``1 / i_max**2`` normalisation, so each branch reduces to
``curvature * (P - centre)**2 + const``.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np


class DomainError(ValueError):
    """Argument outside the domain of the potential."""


@dataclass(frozen=True)
class CatalysisParams:
    S: float
    W: float
    p_min: float
    p_mem: float
    p_max: float
    i_c: float
    i_max: float
    a: float = 0.0

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ValueError("inadmissible CatalysisParams: " + "; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not 0 <= self.p_min < self.p_mem < self.p_max <= 1:
            out.append("need 0 <= p_min < p_mem < p_max <= 1")
        if not 0 < self.i_c < self.i_max:
            out.append("need 0 < i_c < i_max")
        if not (self.S > 0 and self.W > 0):
            out.append("need S > 0 and W > 0")
        if not self.a >= 0:
            out.append("need a >= 0")
        if not all(math.isfinite(getattr(self, f.name)) for f in fields(self)):
            out.append("non-finite value")
        return out

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


class Regime(enum.Enum):
    LOW = "LowI"
    MED = "MedI"
    HIGH = "HighI"


# --------------------------------------------------------------------------
# branch geometry

def p_low(p: CatalysisParams, I: float) -> float:
    """Lower minimum (vertex of the lower well)."""
    return p.p_min + (p.p_mem - p.p_min) * I / (4.0 * p.i_c)


def p_med(p: CatalysisParams, I: float) -> float:
    """Barrier position; equals ``p_low`` at ``I = i_c``."""
    d = p.p_mem - p.p_min
    return p.p_min + d / 2.0 - d * I / (4.0 * p.i_c)


def p_high(p: CatalysisParams, I: float) -> float:
    """Upper minimum, moving linearly from ``p_mem`` to ``p_max``."""
    return p.p_mem + (p.p_max - p.p_mem) * I / p.i_max


def _p_int_parts(p: CatalysisParams, I):
    S, W, Pmin, Pmem, Pmax, Ic, Im = p.S, p.W, p.p_min, p.p_mem, p.p_max, p.i_c, p.i_max
    d = Pmem - Pmin
    num = (
        (8 * S * (Pmem + Pmin) * (Pmax - Pmem) * I
         + 6 * ((S + W / 3) * Pmem + 5 * (S - W / 5) * Pmin / 3) * d * Im) * Ic**2
        - 4 * d * (S * (Pmax - Pmem) * I + ((S + 2 * W) * Pmem + Pmin * (S - 2 * W)) * Im / 2) * I * Ic
        - I**2 * Im * d**2 * (S - 2 * W)
    )
    den = 16 * S * Ic * (((Pmax - Pmem) * I + Im * d) * Ic - I * Im * d / 4)
    return num, den


def p_int(p: CatalysisParams, I):
    """Crossing of the lower-well S-parabola with the upper-well S-parabola."""
    num, den = _p_int_parts(p, I)
    with np.errstate(divide="ignore", invalid="ignore"):
        return num / den


def _quadratic_roots(a: float, b: float, c: float) -> list[float]:
    scale = max(abs(a), abs(b), abs(c))
    if scale == 0.0:
        return []
    if abs(a) <= 1e-14 * scale:
        return [-c / b] if abs(b) > 1e-14 * scale else []
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    return [q / a] + ([c / q] if q != 0 else [])


@functools.lru_cache(maxsize=4096)
def compute_i_cint(params: CatalysisParams) -> float:
    """Intensity where ``p_int`` first leaves [0, 1] above ``i_c`` (``i_max`` if never).

    ``p_int`` is a quadratic over a linear function of ``I``, so ``p_int = t``
    is a quadratic equation; roots at a pole of ``p_int`` are discarded.
    """
    n, dn = np.array([_p_int_parts(params, x) for x in (0.0, 1.0, 2.0)]).T
    # exact coefficients from three samples: num = n2 I^2 + n1 I + n0, den = d1 I + d0
    n0, d0 = n[0], dn[0]
    n2 = 0.5 * (n[2] - 2 * n[1] + n[0])
    n1 = n[1] - n[0] - n2
    d1 = dn[1] - dn[0]
    roots = []
    for t in (0.0, 1.0):
        for r in _quadratic_roots(n2, n1 - t * d1, n0 - t * d0):
            if params.i_c < r <= params.i_max and abs(d1 * r + d0) > 1e-12 * (abs(d1) + abs(d0)):
                roots.append(r)
    return min(roots) if roots else params.i_max


def regime(params: CatalysisParams, I: float) -> Regime:
    if I <= params.i_c:
        return Regime.LOW
    if I <= compute_i_cint(params):
        return Regime.MED
    return Regime.HIGH


class Branch(NamedTuple):
    name: str      # V1, V2, V3, S or W
    lo: float      # active on [lo, hi)
    hi: float
    centre: float
    curvature: float


def branches(params: CatalysisParams, I: float) -> list[Branch]:
    """Ordered branches at intensity ``I`` (zero-width branches included)."""
    S, W = params.S, params.W
    lo_c, hi_c = p_low(params, I), p_high(params, I)
    inf = math.inf
    reg = regime(params, I)
    if reg is Regime.LOW:
        med = p_med(params, I)
        return [
            Branch("V1", -inf, lo_c, lo_c, S),
            Branch("V2", lo_c, med, lo_c, W),
            Branch("S", med, hi_c, hi_c, S),
            Branch("W", hi_c, inf, hi_c, W),
        ]
    if reg is Regime.MED:
        pi = float(p_int(params, I))
        return [
            Branch("V3", -inf, pi, lo_c, S),
            Branch("S", pi, hi_c, hi_c, S),
            Branch("W", max(pi, hi_c), inf, hi_c, W),
        ]
    return [Branch("S", -inf, hi_c, hi_c, S), Branch("W", hi_c, inf, hi_c, W)]


def _active_branch(brs: list[Branch], P: float) -> Branch:
    # right (higher-P) branch wins at a junction
    for b in brs:
        if P < b.hi and P >= b.lo:
            return b
    return brs[-1]


@dataclass(frozen=True)
class BranchGeometry:
    p_low: float
    p_med: float
    p_high: float
    p_int: float


def branch_geometry(params: CatalysisParams, I: float) -> BranchGeometry:
    return BranchGeometry(
        p_low(params, I), p_med(params, I), p_high(params, I), float(p_int(params, I))
    )


# --------------------------------------------------------------------------
# printed branch polynomials

def _V1(params: CatalysisParams, I, P):
    S, W, Pmin, Pmem, Pmax, Ic, Im = (params.S, params.W, params.p_min, params.p_mem,
                                      params.p_max, params.i_c, params.i_max)
    d = Pmem - Pmin
    return (
        (((8 * P**2 - 16 * P * Pmin + 2 * Pmem**2 - 4 * Pmem * Pmin + 10 * Pmin**2) * S
          - 2 * d**2 * W) * Ic**2
         - 4 * d * I * ((-Pmin / 2 - Pmem / 2 + P) * S - W * d) * Ic
         + I**2 * d**2 * (S - 2 * W)) * Im**2
        + 4 * I * S * Ic * d * (Pmax - Pmem) * (I + 2 * Ic) * Im
        + 8 * I**2 * S * Ic**2 * (Pmax - Pmem) ** 2
    ) / (8 * Ic**2)


def _V2(params: CatalysisParams, I, P):
    S, W, Pmin, Pmem, Pmax, Ic, Im = (params.S, params.W, params.p_min, params.p_mem,
                                      params.p_max, params.i_c, params.i_max)
    d = Pmem - Pmin
    return (
        (((4 * S - 4 * W) * Pmem**2 - 8 * Pmin * (S - W) * Pmem + 4 * S * Pmin**2
          + 16 * (P - Pmin / 2) * (P - 3 * Pmin / 2) * W) * Ic**2
         - 8 * d * ((-S / 2 - W) * Pmem + P * W + Pmin * S / 2) * I * Ic
         + I**2 * d**2 * (S - 3 * W)) * Im**2
        + 8 * I * S * Ic * d * (Pmax - Pmem) * (I + 2 * Ic) * Im
        + 16 * I**2 * S * Ic**2 * (Pmax - Pmem) ** 2
    ) / (16 * Ic**2)


def _upper(params: CatalysisParams, I, P, k):
    Im = params.i_max
    return k * ((params.p_mem - P) * Im + (params.p_max - params.p_mem) * I) ** 2


def branch_value(params: CatalysisParams, I: float, P, name: str):
    """Evaluate the named branch polynomial (with the ``1/i_max**2`` prefactor)."""
    Im2 = params.i_max**2
    if name in ("V1", "V3"):
        return _V1(params, I, P) / Im2
    if name == "V2":
        return _V2(params, I, P) / Im2
    if name == "S":
        return _upper(params, I, P, params.S) / Im2
    if name == "W":
        return _upper(params, I, P, params.W) / Im2
    raise KeyError(name)


def _check(params: CatalysisParams, I: float, P) -> None:
    if not (0.0 <= I <= params.i_max):
        raise DomainError(f"I={I} outside [0, i_max={params.i_max}]")
    Parr = np.asarray(P)
    if np.any(~(Parr >= 0.0)) or np.any(~(Parr <= 1.0)):
        raise DomainError("P outside [0, 1]")


def potential_value(params: CatalysisParams, I: float, P):
    """``V(P; I)``; ``P`` may be a scalar or an array."""
    _check(params, I, P)
    brs = branches(params, I)
    if np.ndim(P) == 0:
        return float(branch_value(params, I, float(P), _active_branch(brs, float(P)).name))
    P = np.asarray(P, dtype=float)
    out = np.empty_like(P)
    done = np.zeros(P.shape, dtype=bool)
    for b in brs:
        m = ~done & (P >= b.lo) & (P < b.hi)
        out[m] = branch_value(params, I, P[m], b.name)
        done |= m
    out[~done] = branch_value(params, I, P[~done], brs[-1].name)
    return out


def _gradient(params: CatalysisParams, I: float, P: float) -> float:
    b = _active_branch(branches(params, I), P)
    return 2.0 * b.curvature * (P - b.centre)


def potential_gradient(params: CatalysisParams, I: float, P):
    """``dV/dP``: linear in ``P`` on each branch; right branch at junctions."""
    _check(params, I, P)
    if np.ndim(P) == 0:
        return _gradient(params, I, float(P))
    brs = branches(params, I)
    P = np.asarray(P, dtype=float)
    out = np.empty_like(P)
    done = np.zeros(P.shape, dtype=bool)
    for b in brs:
        m = ~done & (P >= b.lo) & (P < b.hi)
        out[m] = 2.0 * b.curvature * (P[m] - b.centre)
        done |= m
    b = brs[-1]
    out[~done] = 2.0 * b.curvature * (P[~done] - b.centre)
    return out


def gradient_unchecked(params: CatalysisParams, I: float, P: float) -> float:
    """Gradient with the outer branches extended beyond [0, 1] (integrator stages)."""
    return _gradient(params, I, P)


def stationary_points(params: CatalysisParams, I: float) -> list[tuple[float, str]]:
    """Local minima and maxima of ``V(.; I)`` in [0, 1], ordered by ``P``.

    Candidates are branch vertices strictly inside their branch and branch
    junctions; a junction is a minimum when the left slope is <= 0 and the
    right slope >= 0, a maximum when the left slope is > 0 and the right < 0.
    """
    if not 0.0 <= I <= params.i_max:
        raise DomainError(f"I={I} outside [0, i_max]")
    brs = [b for b in branches(params, I) if b.hi > b.lo]
    out: list[tuple[float, str]] = []
    for b in brs:
        if b.lo < b.centre < b.hi:
            out.append((b.centre, "min"))
    for left, right in zip(brs, brs[1:]):
        x = right.lo
        gl = 2.0 * left.curvature * (x - left.centre)
        gr = 2.0 * right.curvature * (x - right.centre)
        if gl <= 0.0 <= gr:
            out.append((x, "min"))
        elif gl > 0.0 > gr:
            out.append((x, "max"))
    return sorted((p, k) for p, k in out if 0.0 <= p <= 1.0)


def minima(params: CatalysisParams, I: float) -> list[float]:
    return [p for p, k in stationary_points(params, I) if k == "min"]


def branch_diagnostics(params: CatalysisParams) -> list[str]:
    """Report parameter sets whose branch layout breaks the intended landscape.

    In the medium regime the lower parabola must stay left of its own vertex
    (``p_int <= p_low``); otherwise a spurious second minimum survives above
    ``i_c``.  The condition is linear in ``I`` on ``(i_c, i_cint]`` and is
    checked at ``i_cint``.
    """
    issues = []
    i_cint = compute_i_cint(params)
    if i_cint > params.i_c:
        I = i_cint
        lo_c, hi_c = p_low(params, I), p_high(params, I)
        pi = float(p_int(params, I))
        if not np.isfinite(pi) or pi > lo_c + 1e-12:
            issues.append(
                f"medium regime: p_int={pi:.6g} exceeds lower vertex p_low={lo_c:.6g} at I={I:.6g}"
            )
        if hi_c <= lo_c:
            issues.append(f"medium regime: lower vertex overtakes upper minimum at I={I:.6g}")
    for I in (0.0, params.i_c):
        g = branch_geometry(params, I)
        if not (g.p_low <= g.p_med + 1e-15 <= g.p_high + 1e-15):
            issues.append(f"low regime: branch order violated at I={I:.6g}")
    return issues


def potential_curve(params: CatalysisParams, I: float, P: np.ndarray):
    """``(V, dV/dP)`` sampled on ``P`` (for plotting / CSV export)."""
    return potential_value(params, I, P), potential_gradient(params, I, P)
