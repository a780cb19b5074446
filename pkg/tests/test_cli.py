import csv
import hashlib
import json
import shutil
import subprocess
import sys

import pytest

from catalysis.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, run
from catalysis.conference import save_conference
from helpers import synthetic, tiny_conference


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture(scope="module")
def conf(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert run(["synth", "--out", str(out), "--seed", "3", "--fellows", "24", "--facilitators", "3", "--sweeps", "60"]) == EXIT_OK
    return out / "conference.json"


def test_synth_outputs(conf):
    summary = json.loads((conf.parent / "synth_summary.json").read_text())
    assert summary["n_fellows"] == 24 and summary["n_pairs"] > 0
    manifest = json.loads((conf.parent / "manifest.json").read_text())
    assert manifest["seed"] == 3 and manifest["subcommand"] == "synth"
    assert {o["path"] for o in manifest["outputs"]} >= {str(conf)}
    assert "numpy" in manifest["versions"]


def test_fit_then_select_then_curve(conf, tmp_path):
    before = digest(conf)
    assert run(["fit", str(conf), "ConstantP", "--out", str(tmp_path / "fit"), "--seed", "0",
                "--emit-predictions"]) == EXIT_OK
    fitted = json.loads((tmp_path / "fit" / "fit.json").read_text())
    assert fitted["model"] == "ConstantP" and 0 < fitted["params"]["p"] < 1
    assert len(read_csv(tmp_path / "fit" / "predictions.csv")) == fitted["n_pairs"]

    models = ["ConstantP", "LinearK0", "LinearItot", "LinearK0Itot", "Threshold"]
    assert run(["select", str(conf), "--models", *models, "--out", str(tmp_path / "sel"), "--seed", "0"]) == EXIT_OK
    rows = read_csv(tmp_path / "sel" / "selection.csv")
    assert sorted(r["model"] for r in rows) == sorted(models)
    assert float(rows[0]["relative_likelihood"]) == 1.0
    assert [float(r["aic"]) for r in rows] == sorted(float(r["aic"]) for r in rows)
    const = next(r for r in rows if r["model"] == "ConstantP")
    assert float(const["nll"]) == pytest.approx(fitted["nll"], abs=1e-6)

    assert run(["curve", str(conf), "ConstantP", "--fit", str(tmp_path / "fit" / "fit.json"),
                "--sims", "20", "--bins", "10", "--out", str(tmp_path / "curve"), "--seed", "1"]) == EXIT_OK
    curve = read_csv(tmp_path / "curve" / "curve.csv")
    assert 1 <= len(curve) <= 10
    assert digest(conf) == before


def test_simulate_demo(tmp_path):
    assert run(["simulate", "--demo", "--out", str(tmp_path), "--seed", "0"]) == EXIT_OK
    summary = json.loads((tmp_path / "simulate_summary.json").read_text())
    final = {f["model"]: f["p_collab"] for f in summary["final"]}
    assert final["Nonlinear"] > summary["memory_level"] > final["Linear"]
    rows = read_csv(tmp_path / "trajectory.csv")
    assert {r["model"] for r in rows} == {"Nonlinear", "Linear"}


def test_interactions_and_potential(conf, tmp_path):
    assert run(["interactions", str(conf), "--profile", "F001,F002", "--out", str(tmp_path)]) == EXIT_OK
    rows = read_csv(tmp_path / "interactions.csv")
    assert all(float(r["i_tot"]) >= 0 for r in rows)
    assert (tmp_path / "profile_F001|F002.csv").exists()
    assert run(["potential", "--params", "1,1,0.1,0.4,0.8,1,5,0", "--intensity", "0",
                "--out", str(tmp_path / "pot")]) == EXIT_OK
    kinds = [r["kind"] for r in read_csv(tmp_path / "pot" / "stationary.csv")]
    assert sorted(kinds) == ["max", "min", "min"]


def test_stats(tmp_path):
    path = tmp_path / "c.json"
    save_conference(synthetic(0), path)
    assert run(["stats", str(path), "--resamples", "200", "--out", str(tmp_path / "s"), "--seed", "2"]) == EXIT_OK
    doc = json.loads((tmp_path / "s" / "stats.json").read_text())
    assert doc["collaboration_gap"]["ratio"] > 1
    assert doc["mini_session_odds"]["odds_ratio"] > 1


def test_anneal_and_counterfactual(tmp_path):
    path = tmp_path / "c.json"
    save_conference(synthetic(0), path)
    for kind in ("Discussion", "SmallGroup"):
        assert run(["anneal", str(path), "--kind", kind, "--solutions", "2", "--sweeps", "60", "--cooling", "0",
                    "--include-actual", "--out", str(tmp_path / "a"), "--seed", "0"]) == EXIT_OK
    assert run(["counterfactual", str(path),
                "--discussion", str(tmp_path / "a" / "solutions_Discussion.json"),
                "--smallgroup", str(tmp_path / "a" / "solutions_SmallGroup.json"),
                "--out", str(tmp_path / "cf")]) == EXIT_OK
    rows = read_csv(tmp_path / "cf" / "counterfactual.csv")
    assert len(rows) == 4
    summary = json.loads((tmp_path / "cf" / "counterfactual_summary.json").read_text())
    assert summary["n_combinations"] == 4


def test_same_seed_same_bytes(conf, tmp_path):
    args = ["fit", str(conf), "LinearK0Itot", "--seed", "5"]
    assert run(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert run(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    assert (tmp_path / "a" / "fit.json").read_bytes() == (tmp_path / "b" / "fit.json").read_bytes()


def test_generated_seed_recorded_and_replayable(tmp_path):
    path = tmp_path / "c.json"
    save_conference(synthetic(0), path)
    assert run(["stats", str(path), "--resamples", "300", "--out", str(tmp_path / "a")]) == EXIT_OK
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["seed_source"] == "generated"
    assert manifest["inputs"] == [{"path": str(path), "sha256": digest(path)}]
    replay = manifest["replay_argv"]
    replay[replay.index("--out") + 1] = str(tmp_path / "b")
    assert run(replay) == EXIT_OK
    assert digest(tmp_path / "a" / "stats.json") == digest(tmp_path / "b" / "stats.json")


def test_unknown_subcommand(capsys):
    assert run(["frobnicate"]) == EXIT_USAGE
    err = capsys.readouterr().err
    assert "usage" in err.lower()
    assert json.loads(err.strip().splitlines()[-1])["error"]["status"] == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["fit", "{conf}", "NoSuchModel"],
    ["curve", "{conf}", "ConstantP", "--params", "0.1,0.2"],
    ["potential", "--params", "1,1"],
    ["simulate", "{conf}"],
    ["synth", "--fellows", "0"],
    ["synth", "--fellows", "24"],
])
def test_usage_errors(argv, conf, tmp_path):
    argv = [a.format(conf=conf) for a in argv]
    assert run(argv + ["--out", str(tmp_path)]) == EXIT_USAGE


def test_data_errors(tmp_path, capsys):
    assert run(["fit", str(tmp_path / "missing.json"), "ConstantP", "--out", str(tmp_path)]) == EXIT_DATA
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    assert run(["select", str(bad), "--out", str(tmp_path)]) == EXIT_DATA
    doc = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert doc["error"]["category"] == "data"


def test_numerical_error(tmp_path):
    path = tmp_path / "c.json"
    save_conference(tiny_conference(), path)
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps([[0.1, 0.1, 0.9, 0.5, 1.0, 0.1]]))
    assert run(["fit", str(path), "LinearODE", "--grid", str(grid), "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL


@pytest.mark.skipif(shutil.which("catalysis") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["catalysis", "simulate", "--demo", "--out", str(tmp_path), "--seed", "0"],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    res = subprocess.run([sys.executable, "-m", "catalysis", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "counterfactual" in res.stdout
