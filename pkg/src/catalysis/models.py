"""The eight candidate models: parameterisation, free-space maps and predictions.

Parameter vectors (natural space):

=====================  ==========================================  ===
model                  parameters                                  k
=====================  ==========================================  ===
RandomUniform          (none)                                      0
ConstantP              p                                           1
LinearK0               a, b            p = a K0 + b                2
LinearItot             a, b            p = a i_tot + b             2
LinearK0Itot           a, b, c         p = a K0 + b i_tot + c      3
Threshold              i_c, p_high, p_low                          3
LinearODE              S, W, p_min, p_max, i_max, a                6
NonlinearCatalysis     S, W, p_min, p_mem, p_max, i_c, i_max, a    8
=====================  ==========================================  ===

RandomUniform draws ``P ~ U(0, 1)`` per pair; its marginal outcome probability
is 1/2 either way, so it is scored as Bernoulli(1/2).  Threshold compares the
largest instantaneous session term ``max_t s(t)`` (intensity with ``a = 0`` and
``I_max = 1``) with ``i_c``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .dynamics import DynamicsModel, LinearParams, PROB_EPS, table_probabilities, DEFAULT_STEP
from .interaction import PairTable
from .potential import CatalysisParams
from .transforms import ordered_unit_from_free, ordered_unit_to_free

REGRESSION_EPS = 1e-6


class ModelKind(str, enum.Enum):
    RANDOM_UNIFORM = "RandomUniform"
    CONSTANT_P = "ConstantP"
    LINEAR_K0 = "LinearK0"
    LINEAR_ITOT = "LinearItot"
    LINEAR_K0_ITOT = "LinearK0Itot"
    THRESHOLD = "Threshold"
    LINEAR_ODE = "LinearODE"
    NONLINEAR = "NonlinearCatalysis"


PARAM_NAMES: dict[ModelKind, tuple[str, ...]] = {
    ModelKind.RANDOM_UNIFORM: (),
    ModelKind.CONSTANT_P: ("p",),
    ModelKind.LINEAR_K0: ("a", "b"),
    ModelKind.LINEAR_ITOT: ("a", "b"),
    ModelKind.LINEAR_K0_ITOT: ("a", "b", "c"),
    ModelKind.THRESHOLD: ("i_c", "p_high", "p_low"),
    ModelKind.LINEAR_ODE: ("S", "W", "p_min", "p_max", "i_max", "a"),
    ModelKind.NONLINEAR: ("S", "W", "p_min", "p_mem", "p_max", "i_c", "i_max", "a"),
}

#: free-parameter counts used for AIC
K_PARAMS: dict[ModelKind, int] = {k: len(v) for k, v in PARAM_NAMES.items()}

REGRESSIONS = (ModelKind.LINEAR_K0, ModelKind.LINEAR_ITOT, ModelKind.LINEAR_K0_ITOT)
DYNAMIC = (ModelKind.LINEAR_ODE, ModelKind.NONLINEAR)
LOG_BOUND = 50.0
LOG_SLOTS = {ModelKind.LINEAR_ODE: (0, 1, 4, 5), ModelKind.NONLINEAR: (0, 1, 6, 7)}

# default multistart anchors
RATE_GRID = (0.05, 0.2, 0.8)
A_GRID = (0.01, 0.05, 0.25)
IMAX_GRID = (0.5, 1.0, 2.0)
P_MIN_GRID = (0.01, 0.03, 0.1)
P_MEM_GRID = (0.2, 0.4, 0.6)
P_MAX_GRID = (0.7, 0.85, 0.95)
IC_FRACTION_GRID = (0.1, 0.25, 0.5)
P_GRID = (0.02, 0.1, 0.3)


@dataclass(frozen=True)
class CandidateModel:
    kind: ModelKind
    step_h: float = DEFAULT_STEP

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))

    @property
    def k_params(self) -> int:
        return K_PARAMS[self.kind]

    @property
    def param_names(self) -> tuple[str, ...]:
        return PARAM_NAMES[self.kind]

    @property
    def name(self) -> str:
        return self.kind.value

    # -- parameter objects -------------------------------------------------
    def dynamics_params(self, x):
        x = [float(v) for v in x]
        if self.kind is ModelKind.NONLINEAR:
            return CatalysisParams(*x)
        if self.kind is ModelKind.LINEAR_ODE:
            return LinearParams(*x)
        raise ValueError(f"{self.name} is not a dynamical model")

    def as_dict(self, x) -> dict[str, float]:
        return dict(zip(self.param_names, map(float, x)))

    # -- free-space maps ---------------------------------------------------
    def to_free(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k is ModelKind.RANDOM_UNIFORM or k in REGRESSIONS:
            return x.copy()
        if k is ModelKind.CONSTANT_P:
            return logit(x)
        if k is ModelKind.THRESHOLD:
            return logit(x)
        if k is ModelKind.LINEAR_ODE:
            S, W, pmin, pmax, imax, a = x
            return np.concatenate([np.log([S, W]), ordered_unit_to_free([pmin, pmax]),
                                   np.log([imax, a])])
        S, W, pmin, pmem, pmax, ic, imax, a = x
        return np.concatenate([np.log([S, W]), ordered_unit_to_free([pmin, pmem, pmax]),
                               [logit(ic / imax)], np.log([imax, a])])

    def from_free(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        k = self.kind
        if k in (ModelKind.LINEAR_ODE, ModelKind.NONLINEAR):
            # log-scale coordinates are bounded so exp stays finite
            z = z.copy()
            for i in LOG_SLOTS[k]:
                z[i] = min(max(z[i], -LOG_BOUND), LOG_BOUND)
        if k is ModelKind.RANDOM_UNIFORM or k in REGRESSIONS:
            return z.copy()
        if k in (ModelKind.CONSTANT_P, ModelKind.THRESHOLD):
            return expit(z)
        if k is ModelKind.LINEAR_ODE:
            pmin, pmax = ordered_unit_from_free(z[2:4])
            return np.array([np.exp(z[0]), np.exp(z[1]), pmin, pmax, np.exp(z[4]), np.exp(z[5])])
        pmin, pmem, pmax = ordered_unit_from_free(z[2:5])
        imax = np.exp(z[6])
        return np.array([np.exp(z[0]), np.exp(z[1]), pmin, pmem, pmax,
                         imax * expit(z[5]), imax, np.exp(z[7])])

    # -- predictions -------------------------------------------------------
    def linear_predictor(self, x, table: PairTable) -> np.ndarray:
        k = self.kind
        if k is ModelKind.LINEAR_K0:
            return x[0] * table.k0 + x[1]
        if k is ModelKind.LINEAR_ITOT:
            return x[0] * table.i_tot + x[1]
        if k is ModelKind.LINEAR_K0_ITOT:
            return x[0] * table.k0 + x[1] * table.i_tot + x[2]
        raise ValueError(f"{self.name} is not a regression")

    def predict(self, x, table: PairTable, strict: bool = False) -> np.ndarray:
        """Per-pair collaboration probability (clipped) for every pair of ``table``.

        ``strict`` makes dynamical models raise on step-size instability.
        """
        x = np.asarray(x, dtype=float)
        if len(x) != self.k_params:
            raise ValueError(f"{self.name} takes {self.k_params} parameters, got {len(x)}")
        n = len(table)
        k = self.kind
        if k is ModelKind.RANDOM_UNIFORM:
            return np.full(n, 0.5)
        if k is ModelKind.CONSTANT_P:
            return np.full(n, float(np.clip(x[0], PROB_EPS, 1 - PROB_EPS)))
        if k in REGRESSIONS:
            return np.clip(self.linear_predictor(x, table), REGRESSION_EPS, 1 - REGRESSION_EPS)
        if k is ModelKind.THRESHOLD:
            p = np.where(table.max_session_term() > x[0], x[1], x[2])
            return np.clip(p, PROB_EPS, 1 - PROB_EPS)
        model = DynamicsModel.NONLINEAR if k is ModelKind.NONLINEAR else DynamicsModel.LINEAR
        return table_probabilities(model, self.dynamics_params(x), table, self.step_h, strict=strict)

    def clip_count(self, x, table: PairTable) -> int:
        """Number of regression predictions that hit the clipping bounds."""
        if self.kind not in REGRESSIONS:
            return 0
        raw = self.linear_predictor(np.asarray(x, dtype=float), table)
        return int(np.sum((raw < REGRESSION_EPS) | (raw > 1 - REGRESSION_EPS)))

    # -- multistart --------------------------------------------------------
    def default_grid(self, table: PairTable) -> list[np.ndarray]:
        """Full-factorial start points; regression and threshold anchors scale with the data."""
        k = self.kind
        ybar = float(np.clip(table.y.mean() if len(table) else 0.5, 1e-3, 1 - 1e-3))
        if k is ModelKind.RANDOM_UNIFORM:
            axes = []
        elif k is ModelKind.CONSTANT_P:
            axes = [P_GRID]
        elif k in REGRESSIONS:
            b_axis = (ybar / 2, ybar, 2 * ybar)
            feats = {
                ModelKind.LINEAR_K0: [table.k0],
                ModelKind.LINEAR_ITOT: [table.i_tot],
                ModelKind.LINEAR_K0_ITOT: [table.k0, table.i_tot],
            }[k]
            axes = [_slope_axis(f, ybar) for f in feats] + [b_axis]
        elif k is ModelKind.THRESHOLD:
            return _threshold_grid(table)
        elif k is ModelKind.LINEAR_ODE:
            axes = [RATE_GRID, RATE_GRID, P_MIN_GRID, P_MAX_GRID, IMAX_GRID, A_GRID]
        else:
            return [
                np.array([S, W, pmin, pmem, pmax, f * imax, imax, a])
                for S, W, pmin, pmem, pmax, f, imax, a in itertools.product(
                    RATE_GRID, RATE_GRID, P_MIN_GRID, P_MEM_GRID, P_MAX_GRID,
                    IC_FRACTION_GRID, IMAX_GRID, A_GRID)
            ]
        return [np.array(v, dtype=float) for v in itertools.product(*axes)]


def _slope_axis(feature: np.ndarray, ybar: float) -> tuple[float, float, float]:
    sd = float(np.std(feature)) if len(feature) else 0.0
    s = ybar / (4.0 * sd) if sd > 0 else 0.0
    return (-s, 0.0, s) if s else (-1e-3, 0.0, 1e-3)


def _threshold_grid(table: PairTable) -> list[np.ndarray]:
    """One start per cut between distinct ``max s`` levels, at the cut's MLE levels."""
    m = table.max_session_term()
    levels = np.unique(m)
    cuts = list((levels[:-1] + levels[1:]) / 2) or [float(levels[0]) if len(levels) else 0.5]
    starts = []
    for cut in cuts:
        cut = float(np.clip(cut, 1e-6, 1 - 1e-6))
        above = m > cut
        hi = table.y[above].mean() if above.any() else 0.5
        lo = table.y[~above].mean() if (~above).any() else 0.5
        starts.append(np.array([cut, *np.clip([hi, lo], 1e-4, 1 - 1e-4)]))
    return starts


def get_model(kind: ModelKind | str | CandidateModel, step_h: float = DEFAULT_STEP) -> CandidateModel:
    if isinstance(kind, CandidateModel):
        return kind
    try:
        return CandidateModel(ModelKind(kind), step_h)
    except ValueError:
        names = ", ".join(k.value for k in ModelKind)
        raise ValueError(f"unknown model {kind!r}; choose from {names}") from None


ALL_MODELS = tuple(ModelKind)
