"""Command-line entry point.

Every run writes its outputs plus ``manifest.json`` (inputs with hashes, full
configuration, seed, library versions) into ``--out``.  Exit status: 0 ok,
2 usage, 3 data, 4 numerical; failures also print one JSON error document on
stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
from dataclasses import asdict
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from .conference import ConferenceError, SessionKind, eligible_pairs, load_conference, save_conference
from .dynamics import DEFAULT_STEP, DynamicsModel, IntegrationError, LinearParams, trajectory
from .fitting import FitError, fit
from .interaction import interaction_profile, pair_table
from .model_selection import DEFAULT_BINS, cumulative_collaboration_curve, select
from .models import ALL_MODELS, get_model
from .potential import CatalysisParams, DomainError, potential_curve, regime, stationary_points
from .scheduler import (
    AnnealError,
    AnnealSchedule,
    AssignmentProblem,
    EnergyWeights,
    ScheduleSolution,
    anneal,
    canonical,
    counterfactual_analysis,
    energy,
    load_solutions,
    save_solutions,
    weights_dict,
)
from .stats import collaboration_gap_analysis, mini_session_odds, shared_session_counts
from .synth import DEFAULT_NL_PARAMS, FIG3_NL_PARAMS, FIG3_PAIR, SynthSpec, fig3_demo, generate_outcomes, generate_conference

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4
PROG = "catalysis"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _report(EXIT_USAGE, "UsageError", message)
        raise SystemExit(EXIT_USAGE)


def _report(status: int, kind: str, message: str) -> None:
    label = {EXIT_USAGE: "usage", EXIT_DATA: "data", EXIT_NUMERICAL: "numerical"}.get(status, "internal")
    doc = {"error": {"status": status, "category": label, "type": kind, "message": message}}
    print(json.dumps(doc), file=sys.stderr)


# --------------------------------------------------------------------------
# run bookkeeping

def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict[str, str]:
    out = {"python": platform.python_version(), "platform": platform.platform()}
    for dist in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = "unknown"
    return out


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, Path):
        return str(x)
    return x


class Run:
    """Output directory, seed and manifest of one invocation."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out)
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.seed_source = "given"
        if getattr(args, "seed", None) is None:
            args.seed = int(np.random.SeedSequence().entropy % 2**32)
            self.seed_source = "generated"

    @property
    def seed(self) -> int:
        return self.args.seed

    def input(self, path: str | Path) -> Path:
        p = Path(path)
        if not p.is_file():
            raise DataError(f"input file not found: {p}")
        self.inputs.append(p)
        return p

    def path(self, name: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        self.outputs.append(p)
        return p

    def write_json(self, name: str, doc: Any) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(_jsonable(doc), indent=1) + "\n")
        return p

    def write_csv(self, name: str, rows: list[dict], columns: Sequence[str] | None = None) -> Path:
        p = self.path(name)
        cols = list(columns or (rows[0].keys() if rows else []))
        with p.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _cell(r.get(k)) for k in cols})
        return p

    def manifest(self) -> None:
        config = {k: v for k, v in vars(self.args).items() if k != "func"}
        replay = list(self.argv)
        if self.seed_source == "generated":
            replay += ["--seed", str(self.seed)]
        doc = {
            "tool": PROG,
            "subcommand": self.args.command,
            "argv": self.argv,
            "replay_argv": replay,
            "seed": self.seed,
            "seed_source": self.seed_source,
            "config": config,
            "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.inputs],
            "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.outputs if p.exists()],
            "versions": _versions(),
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(_jsonable(doc), indent=1) + "\n")


def _cell(v: Any) -> Any:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    return v


# --------------------------------------------------------------------------
# argument helpers

def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _pair(text: str) -> tuple[str, str]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError(f"expected A,B, got {text!r}")
    return parts[0], parts[1]


def _model_params(model: str, values: Sequence[float] | None, default=None) -> tuple[float, ...]:
    m = get_model(model)
    if values is None:
        if default is None:
            raise UsageError(f"--params required for {m.name} ({', '.join(m.param_names)})")
        values = default
    if len(values) != m.k_params:
        raise UsageError(f"{m.name} takes {m.k_params} parameters ({', '.join(m.param_names)}), got {len(values)}")
    if m.kind.value in ("LinearODE", "NonlinearCatalysis"):
        try:
            m.dynamics_params(values)
        except ValueError as exc:
            raise UsageError(str(exc))
    return tuple(values)


def _model_name(text: str) -> str:
    try:
        return get_model(text).name
    except (KeyError, ValueError):
        names = ", ".join(k.value for k in ALL_MODELS)
        raise argparse.ArgumentTypeError(f"unknown model {text!r} (choose from {names})")


def _linear_from_nl(p: CatalysisParams) -> LinearParams:
    return LinearParams(p.S, p.W, p.p_min, p.p_max, p.i_max, p.a)


# --------------------------------------------------------------------------
# subcommands

def cmd_synth(run: Run) -> None:
    a = run.args
    params = _model_params(a.model, a.params, DEFAULT_NL_PARAMS if a.model == "NonlinearCatalysis" else None)
    kw = dict(
        n_fellows=a.fellows, n_facilitators=a.facilitators,
        n_discussion_sessions=a.discussion_sessions, n_smallgroup_sessions=a.smallgroup_sessions,
        discussion_minutes=a.discussion_minutes, smallgroup_minutes=a.smallgroup_minutes,
        model=a.model, params=params, seed=run.seed, anneal_sweeps=a.sweeps,
        merge_teams=a.merge_teams, name=a.name,
    )
    if a.k0_dist is not None:
        kw["k0_distribution"] = a.k0_dist
    try:
        spec = SynthSpec(**kw)
    except ValueError as exc:
        raise UsageError(str(exc))
    c = generate_conference(spec)
    if not a.no_outcomes:
        c = generate_outcomes(c, spec.model, spec.params, run.seed, merge_teams=spec.merge_teams)
    save_conference(c, run.path("conference.json"))
    pairs = eligible_pairs(c)
    run.write_json("synth_summary.json", {
        "n_participants": len(c.participants), "n_fellows": len(c.fellows),
        "n_sessions": len(c.sessions), "n_pairs": len(pairs),
        "n_collaborating_pairs": sum(p.collaborated for p in pairs),
        "n_teams": len(c.proposal_teams), "model": spec.model, "params": params,
    })


def cmd_interactions(run: Run) -> None:
    a = run.args
    c = load_conference(run.input(a.conference))
    table = pair_table(c)
    small = shared_session_counts(c, [p.key for p in table.pairs], SessionKind.SMALL_GROUP)
    disc = shared_session_counts(c, [p.key for p in table.pairs], SessionKind.DISCUSSION)
    rows = [
        {"a": p.a, "b": p.b, "k0": int(k), "i_tot": float(i), "max_session_term": float(m),
         "shared_small_groups": int(s), "shared_discussions": int(d), "collaborated": bool(y)}
        for p, k, i, m, s, d, y in zip(table.pairs, table.k0, table.i_tot, table.max_session_term(),
                                       small, disc, table.y)
    ]
    run.write_csv("interactions.csv", rows,
                  ["a", "b", "k0", "i_tot", "max_session_term", "shared_small_groups",
                   "shared_discussions", "collaborated"])
    for pr in a.profile or ():
        prof = interaction_profile(c, pr, a.a, a.i_max)
        prow = [{"t_start": float(t0), "t_end": float(t1), "intensity": float(v)}
                for t0, t1, v in zip(prof.times[:-1], prof.times[1:], prof.intensities)]
        run.write_csv(f"profile_{prof.pair}.csv", prow, ["t_start", "t_end", "intensity"])


def cmd_simulate(run: Run) -> None:
    a = run.args
    if a.demo:
        c = fig3_demo()
        pairs = [FIG3_PAIR]
        nl = CatalysisParams(*(a.params or FIG3_NL_PARAMS))
    else:
        if a.conference is None or not a.pair:
            raise UsageError("simulate needs a conference and at least one --pair (or --demo)")
        c = load_conference(run.input(a.conference))
        pairs = a.pair
        nl = CatalysisParams(*_model_params("NonlinearCatalysis", a.params, FIG3_NL_PARAMS))
    lin = LinearParams(*a.linear_params) if a.linear_params else _linear_from_nl(nl)
    rows, finals = [], []
    for pr in pairs:
        for model, params in ((DynamicsModel.NONLINEAR, nl), (DynamicsModel.LINEAR, lin)):
            tr = trajectory(model, params, c, pr, a.step, printed=a.printed)
            prof = interaction_profile(c, pr, params.a, params.i_max)
            for t, p in zip(tr.times, tr.probabilities):
                rows.append({"pair": prof.pair, "model": model.value, "t": float(t), "P": float(p),
                             "I": prof.at(min(float(t), prof.t_collab))})
            finals.append({"pair": prof.pair, "model": model.value, "p_collab": tr.p_collab,
                           "clamp_events": tr.clamp_events})
    run.write_csv("trajectory.csv", rows, ["pair", "model", "t", "I", "P"])
    run.write_json("simulate_summary.json", {
        "nonlinear_params": asdict(nl), "linear_params": asdict(lin), "step_h": a.step,
        "memory_level": 0.5 * (nl.p_mem + nl.p_min), "final": finals,
    })


def cmd_potential(run: Run) -> None:
    a = run.args
    p = CatalysisParams(*_model_params("NonlinearCatalysis", a.params))
    levels = list(a.intensity or np.linspace(0.0, p.i_max, a.levels))
    P = np.linspace(0.0, 1.0, a.points)
    rows, stat = [], []
    for I in levels:
        V, dV = potential_curve(p, float(I), P)
        reg = regime(p, float(I)).value
        rows += [{"I": float(I), "P": float(x), "V": float(v), "dV_dP": float(g), "regime": reg}
                 for x, v, g in zip(P, V, dV)]
        stat += [{"I": float(I), "P": float(x), "kind": kind} for x, kind in stationary_points(p, float(I))]
    run.write_csv("potential.csv", rows, ["I", "P", "V", "dV_dP", "regime"])
    run.write_csv("stationary.csv", stat, ["I", "P", "kind"])


def _load_grid(path: Path) -> list[list[float]]:
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = [list(map(float, r)) for r in csv.reader(text.splitlines()) if r and not r[0].startswith("#")]
    if isinstance(doc, dict):
        doc = doc.get("grid")
    if not isinstance(doc, list) or not all(isinstance(r, list) for r in doc):
        raise DataError(f"{path}: grid must be a list of parameter vectors")
    return [[float(v) for v in r] for r in doc]


def cmd_fit(run: Run) -> None:
    a = run.args
    c = load_conference(run.input(a.conference))
    m = get_model(a.model)
    table = pair_table(c)
    grid = _load_grid(run.input(a.grid)) if a.grid else None
    if grid is not None and any(len(g) != m.k_params for g in grid):
        raise DataError(f"grid rows must have {m.k_params} values for {m.name}")
    res = fit(m, table, grid=grid, seed=run.seed, n_refine=a.refine, workers=a.workers)
    doc = res.as_dict()
    doc["aic"] = 2 * res.k_params + 2 * res.nll
    run.write_json("fit.json", doc)
    if a.emit_predictions:
        p = m.predict(res.params, table)
        run.write_csv("predictions.csv", [
            {"a": pr.a, "b": pr.b, "k0": int(k), "i_tot": float(i), "collaborated": bool(y), "p": float(q)}
            for pr, k, i, y, q in zip(table.pairs, table.k0, table.i_tot, table.y, p)
        ], ["a", "b", "k0", "i_tot", "collaborated", "p"])


def cmd_select(run: Run) -> None:
    a = run.args
    c = load_conference(run.input(a.conference))
    kinds = a.models or [k.value for k in ALL_MODELS]
    rows = select(pair_table(c), kinds, seed=run.seed, n_refine=a.refine, workers=a.workers)
    run.write_csv("selection.csv", [r.as_dict() for r in rows],
                  ["model", "k_params", "nll", "aic", "delta_aic", "relative_likelihood", "error"])
    run.write_json("selection.json", {
        "rows": [dict(r.as_dict(), fit=r.fit.as_dict() if r.fit else None) for r in rows],
        "preferred": next((r.model for r in rows if r.error is None), None),
    })


def _params_from_fit(path: Path, model: str) -> tuple[float, ...]:
    doc = json.loads(path.read_text())
    if doc.get("model") != model:
        raise DataError(f"{path} holds a {doc.get('model')} fit, not {model}")
    names = get_model(model).param_names
    return tuple(float(doc["params"][n]) for n in names)


def cmd_curve(run: Run) -> None:
    a = run.args
    c = load_conference(run.input(a.conference))
    if a.fit:
        params = _params_from_fit(run.input(a.fit), a.model)
    else:
        params = _model_params(a.model, a.params)
    res = cumulative_collaboration_curve(pair_table(c), a.model, params, bins=a.bins, n_sims=a.sims,
                                         seed=run.seed, lam=a.lam, level=a.level)
    rows = [
        {"bin": j, "edge_low": res.edges[j], "edge_high": res.edges[j + 1], "observed": res.observed[j],
         "mean": res.mean[j], "lower": res.lower[j], "upper": res.upper[j],
         "residual": res.residuals[j], "inside": bool(res.inside[j])}
        for j in range(len(res.observed))
    ]
    run.write_csv("curve.csv", rows)
    run.write_json("curve_summary.json", {
        "model": a.model, "params": params, "lambda": res.lam, "n_bins": len(rows),
        "n_sims": res.n_sims, "level": a.level, "coverage": res.coverage,
        "bins_inside": int(res.inside.sum()),
    })


def cmd_stats(run: Run) -> None:
    a = run.args
    confs = [load_conference(run.input(p)) for p in a.conference]
    gap = collaboration_gap_analysis(confs, n_resamples=a.resamples, seed=run.seed, alternative=a.alternative)
    odds = mini_session_odds(confs, n_resamples=a.resamples, seed=run.seed + 7, level=a.level)
    run.write_json("stats.json", {
        "collaboration_gap": {
            "mean_i_tot_collaborating": gap.mean_collab, "mean_i_tot_other": gap.mean_noncollab,
            "ratio": gap.ratio, "n_collaborating": gap.n_collab, "n_other": gap.n_noncollab,
            "mann_whitney": asdict(gap.u_test),
            "bootstrap_collaborating": _boot(gap.boot_collab),
            "bootstrap_other": _boot(gap.boot_noncollab),
        },
        "mini_session_odds": asdict(odds),
    })
    kde = []
    for label, (x, y) in (("collaborating", gap.kde_collab), ("other", gap.kde_noncollab)):
        kde += [{"group": label, "mean_i_tot": float(u), "density": float(v)} for u, v in zip(x, y)]
    run.write_csv("bootstrap_kde.csv", kde, ["group", "mean_i_tot", "density"])


def _boot(b) -> dict:
    return {"mean": b.mean, "ci_low": b.ci_low, "ci_high": b.ci_high,
            "n_resamples": b.n_resamples, "seed": b.seed}


def _weights(path: str | None, run: Run) -> EnergyWeights:
    if not path:
        return EnergyWeights()
    doc = json.loads(run.input(path).read_text())
    try:
        return EnergyWeights(**doc)
    except TypeError as exc:
        raise DataError(f"bad weights file: {exc}")


def cmd_anneal(run: Run) -> None:
    a = run.args
    c = load_conference(run.input(a.conference))
    kind = SessionKind(a.kind)
    w = _weights(a.weights, run)
    problem = AssignmentProblem.from_conference(c, kind, w, enforce_bounds=not a.no_size_bounds)
    if not problem.sessions:
        raise DataError(f"conference has no {kind.value} sessions")
    sched = AnnealSchedule(T0=a.t0, cooling=a.cooling, sweeps=a.sweeps)
    sols = anneal(problem, sched, n_solutions=a.solutions, seed=run.seed, n_chains=a.chains,
                  workers=a.workers)
    if a.include_actual:
        actual = {s.id: s.groups for s in c.sessions if s.kind is kind}
        if canonical(actual) not in {s.key() for s in sols}:
            sols = [ScheduleSolution(actual, energy(actual, problem))] + sols[: max(a.solutions - 1, 0)]
            sols.sort(key=lambda s: (s.energy, s.key()))
            for r, s in enumerate(sols):
                s.rank = r
    save_solutions(sols, run.path(f"solutions_{kind.value}.json"), meta={
        "kind": kind.value, "seed": run.seed, "weights": weights_dict(w),
        "schedule": asdict(sched), "cooling_factor": sched.cooling_factor(),
    })
    run.write_csv(f"solutions_{kind.value}.csv",
                  [{"rank": s.rank, "energy": s.energy} for s in sols], ["rank", "energy"])


def cmd_counterfactual(run: Run) -> None:
    a = run.args
    c = load_conference(run.input(a.conference))
    d = load_solutions(run.input(a.discussion))
    s = load_solutions(run.input(a.smallgroup))
    rep = counterfactual_analysis(c, d, s)
    run.write_csv("counterfactual.csv", rep.rows(),
                  ["combination", "discussion_solution", "smallgroup_solution", "i_bar_cf",
                   "difference", "shares_small_groups"])
    exc = rep.exceptions
    run.write_json("counterfactual_summary.json", {
        "i_bar_actual": rep.i_bar_actual, "n_combinations": len(rep.i_bar_cf),
        "fraction_actual_greater": rep.fraction_actual_greater,
        "n_exceptions": len(exc),
        "exceptions_share_actual_small_groups": bool(np.all(rep.shares_small_groups[exc])) if len(exc) else True,
        "wilcoxon": asdict(rep.wilcoxon) if rep.wilcoxon else None,
    })


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=None, help="random seed (generated and recorded if omitted)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for parallel stages")

    p = _Parser(prog=PROG, description="Interaction-driven collaboration models for conference data.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    def add(name: str, func: Callable[[Run], None], help: str):
        sp = sub.add_parser(name, parents=[common], help=help, description=help)
        sp.set_defaults(func=func)
        return sp

    sp = add("synth", cmd_synth, "generate a synthetic conference with model-drawn collaborations")
    sp.add_argument("--fellows", type=int, default=50)
    sp.add_argument("--facilitators", type=int, default=5)
    sp.add_argument("--discussion-sessions", type=int, default=4)
    sp.add_argument("--smallgroup-sessions", type=int, default=4)
    sp.add_argument("--discussion-minutes", type=float, default=75.0)
    sp.add_argument("--smallgroup-minutes", type=float, default=30.0)
    sp.add_argument("--k0-dist", type=_floats, default=None, help="7 probabilities for K0 = 0..6")
    sp.add_argument("--model", type=_model_name, default="NonlinearCatalysis")
    sp.add_argument("--params", type=_floats, default=None, help="generating parameters (comma-separated)")
    sp.add_argument("--sweeps", type=int, default=200, help="annealing sweeps for the group assignment")
    sp.add_argument("--merge-teams", action="store_true", help="record 3-4 person cliques as single teams")
    sp.add_argument("--no-outcomes", action="store_true", help="skip drawing collaborations")
    sp.add_argument("--name", default="synthetic")

    sp = add("interactions", cmd_interactions, "per-pair total effective interaction table")
    sp.add_argument("conference")
    sp.add_argument("--profile", type=_pair, action="append", help="also write the profile of pair A,B")
    sp.add_argument("--a", type=float, default=0.05, help="prior-knowledge weight for profiles")
    sp.add_argument("--i-max", type=float, default=1.0, help="intensity scale for profiles")

    sp = add("simulate", cmd_simulate, "integrate nonlinear and linear trajectories for pairs")
    sp.add_argument("conference", nargs="?")
    sp.add_argument("--pair", type=_pair, action="append")
    sp.add_argument("--demo", action="store_true", help="three-session demo schedule and its parameters")
    sp.add_argument("--params", type=_floats, default=None, help="S,W,p_min,p_mem,p_max,i_c,i_max,a")
    sp.add_argument("--linear-params", type=_floats, default=None, help="S,W,p_min,p_max,i_max,a")
    sp.add_argument("--step", type=float, default=DEFAULT_STEP)
    sp.add_argument("--printed", action="store_true", help="linear weakening term relative to p_max")

    sp = add("potential", cmd_potential, "tabulate V(P) and stationary points at given intensities")
    sp.add_argument("--params", type=_floats, required=True, help="S,W,p_min,p_mem,p_max,i_c,i_max,a")
    sp.add_argument("--intensity", type=float, action="append", help="intensity level (repeatable)")
    sp.add_argument("--levels", type=int, default=11, help="evenly spaced levels in [0, i_max] if none given")
    sp.add_argument("--points", type=int, default=201)

    sp = add("fit", cmd_fit, "maximum-likelihood fit of one model")
    sp.add_argument("conference")
    sp.add_argument("model", type=_model_name)
    sp.add_argument("--grid", help="JSON or CSV file of start vectors")
    sp.add_argument("--refine", type=int, default=4, help="grid points refined with Nelder-Mead")
    sp.add_argument("--emit-predictions", action="store_true", help="write per-pair probabilities CSV")

    sp = add("select", cmd_select, "fit candidate models and rank them by AIC")
    sp.add_argument("conference")
    sp.add_argument("--models", type=_model_name, nargs="+")
    sp.add_argument("--refine", type=int, default=4)

    sp = add("curve", cmd_curve, "observed vs. simulated cumulative collaborations")
    sp.add_argument("conference")
    sp.add_argument("model", type=_model_name)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--params", type=_floats)
    g.add_argument("--fit", help="fit.json written by the fit subcommand")
    sp.add_argument("--bins", type=int, default=DEFAULT_BINS)
    sp.add_argument("--sims", type=int, default=100)
    sp.add_argument("--lam", type=float, default=None, help="K0 weight on the axis (default from a)")
    sp.add_argument("--level", type=float, default=0.95)

    sp = add("stats", cmd_stats, "collaborator interaction gap and mini-session odds")
    sp.add_argument("conference", nargs="+")
    sp.add_argument("--resamples", type=int, default=2000)
    sp.add_argument("--level", type=float, default=0.95)
    sp.add_argument("--alternative", choices=("two_sided", "greater", "less"), default="two_sided")

    sp = add("anneal", cmd_anneal, "alternative group assignments for one session kind")
    sp.add_argument("conference", help="conference file defining fellows, sessions and constraints")
    sp.add_argument("--kind", choices=[SessionKind.DISCUSSION.value, SessionKind.SMALL_GROUP.value],
                    required=True)
    sp.add_argument("--solutions", type=int, default=50)
    sp.add_argument("--chains", type=int, default=None)
    sp.add_argument("--sweeps", type=int, default=500)
    sp.add_argument("--cooling", type=float, default=0.995, help="per-sweep factor; <= 0 derives it")
    sp.add_argument("--t0", type=float, default=0.0, help="initial temperature; <= 0 calibrates it")
    sp.add_argument("--weights", help="JSON file of energy weights")
    sp.add_argument("--include-actual", action="store_true", help="keep the conference's own assignment")
    sp.add_argument("--no-size-bounds", action="store_true")

    sp = add("counterfactual", cmd_counterfactual, "collaborator interaction under alternative schedules")
    sp.add_argument("conference")
    sp.add_argument("--discussion", required=True, help="discussion solutions file")
    sp.add_argument("--smallgroup", required=True, help="small-group solutions file")
    return p


_DATA_ERRORS = (ConferenceError, DataError, KeyError, json.JSONDecodeError, OSError)
_NUMERICAL_ERRORS = (FitError, AnnealError, IntegrationError, DomainError, FloatingPointError)


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "workers", 1) < 1:
        _report(EXIT_USAGE, "UsageError", "--workers must be positive")
        return EXIT_USAGE
    r = Run(args, argv)
    try:
        args.func(r)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _report(EXIT_USAGE, "UsageError", str(exc))
        return EXIT_USAGE
    except _NUMERICAL_ERRORS as exc:
        _report(EXIT_NUMERICAL, type(exc).__name__, str(exc))
        return EXIT_NUMERICAL
    except _DATA_ERRORS as exc:
        _report(EXIT_DATA, type(exc).__name__, str(exc))
        return EXIT_DATA
    except ValueError as exc:
        _report(EXIT_DATA, type(exc).__name__, str(exc))
        return EXIT_DATA
    r.manifest()
    return EXIT_OK


def main() -> None:
    sys.exit(run())
