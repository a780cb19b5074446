"""Smooth bijections between constrained parameters and R^n."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import expit, logit


def _logsumexp0(z: np.ndarray) -> np.ndarray:
    """Softmax of ``(0, z_1, ..., z_m)``."""
    full = np.concatenate([[0.0], z])
    full = full - full.max()
    e = np.exp(full)
    return e / e.sum()


def ordered_unit_to_free(levels: Sequence[float]) -> np.ndarray:
    """Map ``0 < l_1 < ... < l_m < 1`` to R^m through the m + 1 gaps."""
    levels = np.asarray(levels, dtype=float)
    gaps = np.diff(np.concatenate([[0.0], levels, [1.0]]))
    if np.any(gaps <= 0):
        raise ValueError(f"levels must be strictly increasing inside (0, 1): {levels}")
    logs = np.log(gaps)
    return logs[1:] - logs[0]


def ordered_unit_from_free(z: Sequence[float]) -> np.ndarray:
    gaps = _logsumexp0(np.asarray(z, dtype=float))
    # rounding in the running sum can overshoot 1 by an ulp
    return np.minimum(np.cumsum(gaps)[:-1], 1.0)


class BoxTransform:
    """Per-coordinate bounds: logistic for two-sided, exp for one-sided."""

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape:
            raise ValueError("bounds shape mismatch")
        if np.any(self.lower >= self.upper):
            raise ValueError("need lower < upper in every coordinate")

    @classmethod
    def from_bounds(cls, bounds: Sequence[tuple[float | None, float | None]]) -> "BoxTransform":
        lo = [-np.inf if b[0] is None else b[0] for b in bounds]
        hi = [np.inf if b[1] is None else b[1] for b in bounds]
        return cls(lo, hi)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def to_free(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.contains(x):
            raise ValueError(f"point {x} outside bounds")
        z = np.empty_like(x)
        for i, (v, lo, hi) in enumerate(zip(x, self.lower, self.upper)):
            lo_f, hi_f = np.isfinite(lo), np.isfinite(hi)
            if lo_f and hi_f:
                u = (v - lo) / (hi - lo)
                z[i] = logit(min(max(u, 1e-12), 1 - 1e-12))
            elif lo_f:
                z[i] = np.log(max(v - lo, 1e-300))
            elif hi_f:
                z[i] = np.log(max(hi - v, 1e-300))
            else:
                z[i] = v
        return z

    def from_free(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        x = np.empty_like(z)
        for i, (v, lo, hi) in enumerate(zip(z, self.lower, self.upper)):
            lo_f, hi_f = np.isfinite(lo), np.isfinite(hi)
            if lo_f and hi_f:
                x[i] = lo + (hi - lo) * expit(v)
            elif lo_f:
                x[i] = lo + np.exp(v)
            elif hi_f:
                x[i] = hi - np.exp(v)
            else:
                x[i] = v
        # rounding can push exp/expit onto the bound; never past it
        return np.clip(x, self.lower, self.upper)
