"""Command-line front end: outputs, manifests, exit codes, determinism."""
from __future__ import annotations

import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import lyapprod as lp
from lyapprod.cli import main


@pytest.fixture()
def gauss_json(tmp_path):
    path = tmp_path / "gauss.json"
    path.write_text(json.dumps({"family": "gaussian", "mu": 0.0, "sigma": 1.0}))
    return path


def _read_csv(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    return header, rows


def _read_manifest(out: Path) -> dict:
    return json.loads(Path(str(out) + ".manifest.json").read_text())


def test_version_runs_as_a_module():
    proc = subprocess.run(
        [sys.executable, "-m", "lyapprod.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("lyap ")


def test_mc_writes_csv_and_manifest(gauss_json, tmp_path, capsys):
    out = tmp_path / "mc.csv"
    argv = [
        "mc", "--eps", "0.5", "--model", str(gauss_json),
        "--steps", "20000", "--seed", "3", "--out", str(out),
    ]
    assert main(argv) == 0
    assert "mean=" in capsys.readouterr().out
    header, rows = _read_csv(out)
    assert header == ["epsilon", "k", "mean", "stderr", "steps", "seed"]
    (row,) = rows
    assert float(row[0]) == 0.5
    assert float(row[1]) == pytest.approx(math.log(2.0), rel=1e-10)
    manifest = _read_manifest(out)
    assert set(manifest) == {"command", "config", "configSha256", "seed", "version"}
    assert manifest["command"] == "mc"
    assert manifest["seed"] == 3
    # reruns are byte-identical artifacts
    first_csv = out.read_bytes()
    first_man = Path(str(out) + ".manifest.json").read_bytes()
    assert main(argv) == 0
    assert out.read_bytes() == first_csv
    assert Path(str(out) + ".manifest.json").read_bytes() == first_man


def test_mc_rejects_out_of_range_epsilon(gauss_json, capsys):
    code = main(["mc", "--eps", "1.5", "--model", str(gauss_json)])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_missing_model_file_is_a_validation_error(tmp_path, capsys):
    code = main(["mc", "--eps", "0.5", "--model", str(tmp_path / "nope.json")])
    assert code == 2
    assert "nope.json" in capsys.readouterr().err


def test_chain_histogram_integrates_to_one(gauss_json, tmp_path):
    out = tmp_path / "hist.csv"
    code = main([
        "chain", "--k", "2", "--model", str(gauss_json),
        "--steps", "50000", "--burn-in", "5000", "--hist-out", str(out),
    ])
    assert code == 0
    header, rows = _read_csv(out)
    assert header == ["binLeft", "binRight", "density"]
    left = np.array([float(r[0]) for r in rows])
    right = np.array([float(r[1]) for r in rows])
    dens = np.array([float(r[2]) for r in rows])
    assert np.all(right > left)
    assert float(np.sum(dens * (right - left))) == pytest.approx(1.0, abs=1e-9)


def test_operator_csv_columns(gauss_json, tmp_path, capsys):
    out = tmp_path / "op.csv"
    code = main(["operator", "--k", "2", "--model", str(gauss_json), "--out", str(out)])
    assert code == 0
    assert "L=" in capsys.readouterr().out
    header, rows = _read_csv(out)
    assert header == ["x", "G", "density"]
    G = np.array([float(r[1]) for r in rows])
    assert np.all(np.diff(G) <= 1e-12)
    # density is -dG/dx by central differences: dips below zero only at
    # solver-noise scale, and flat stretches must not print as "-0"
    dens = np.array([float(r[2]) for r in rows])
    assert dens.min() > -1e-6
    assert all(r[2] != "-0" for r in rows)


def test_operator_iterate_budget_maps_to_exit_one(gauss_json, capsys):
    code = main([
        "operator", "--k", "2", "--model", str(gauss_json),
        "--method", "iterate", "--max-iter", "3",
    ])
    assert code == 1
    assert "no convergence" in capsys.readouterr().err


def test_wd_prints_and_reruns_identically(tmp_path, capsys):
    out = tmp_path / "wd.json"
    argv = ["wd", "--eps", repr(math.exp(-10.0)), "--json-out", str(out)]
    assert main(argv) == 0
    assert capsys.readouterr().out.strip() == "0.02863807"
    payload = json.loads(out.read_text())
    assert payload["value"] == pytest.approx(0.028638074592828348, rel=1e-12)
    blob = out.read_bytes()
    assert main(argv) == 0
    assert out.read_bytes() == blob


def test_edge_csv_and_json_summary(gauss_json, tmp_path):
    out = tmp_path / "edge.csv"
    summary = tmp_path / "edge.json"
    code = main([
        "edge", "--model", str(gauss_json), "--side", "left",
        "--out", str(out), "--json-out", str(summary),
    ])
    assert code == 0
    header, rows = _read_csv(out)
    assert header == ["x", "F", "residual"]
    F = np.array([float(r[1]) for r in rows])
    assert np.all(np.diff(F) >= 0.0)
    payload = json.loads(summary.read_text())
    assert set(payload) == {"slopeRaw", "intercept", "rhoEstimate"}
    assert payload["intercept"] == pytest.approx(-1.26699115, abs=1e-6)
    assert _read_manifest(out)["command"] == "edge"
    assert _read_manifest(summary)["command"] == "edge"


def test_dh_constants_json(gauss_json, tmp_path, capsys):
    out = tmp_path / "constants.json"
    code = main(["dh", "constants", "--model", str(gauss_json), "--json-out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert set(payload) == {"kappa1", "kappa2", "cLeft", "cRight", "rhoLeft", "rhoRight"}
    assert payload["kappa1"] == pytest.approx(0.25, abs=1e-6)
    assert payload["cLeft"] == payload["cRight"]  # symmetric disorder
    assert payload["kappa2"] == pytest.approx(-1.26699115, abs=1e-6)


def test_dh_prediction_rows(gauss_json, tmp_path):
    out = tmp_path / "dh.csv"
    code = main(["dh", "--model", str(gauss_json), "--k", "6,9", "--out", str(out)])
    assert code == 0
    header, rows = _read_csv(out)
    assert header == ["k", "Ck", "kappa1", "kappa2", "prediction", "residual"]
    by_k = {float(r[0]): r for r in rows}
    assert set(by_k) == {6.0, 9.0}
    assert float(by_k[6.0][4]) == pytest.approx(0.0528205209964, rel=1e-6)
    assert float(by_k[9.0][4]) == pytest.approx(0.0323289418452, rel=1e-6)
    # the one-step residual shrinks with k
    assert float(by_k[9.0][5]) < float(by_k[6.0][5])


def test_compare_table(gauss_json, tmp_path):
    out = tmp_path / "cmp.csv"
    code = main([
        "compare", "--model", str(gauss_json), "--k", "2",
        "--steps", "200000", "--out", str(out),
    ])
    assert code == 0
    header, rows = _read_csv(out)
    assert header == [
        "k", "mc", "mcStderr", "ergodic", "ergodicStderr", "operator", "dh", "residual",
    ]
    (row,) = rows
    mc, operator_value = float(row[1]), float(row[5])
    assert mc == pytest.approx(operator_value, abs=5e-3)


def test_fig2_overlay(tmp_path, capsys):
    out = tmp_path / "fig2.csv"
    code = main(["fig2", "--out", str(out)])
    assert code == 0
    assert "plateau=" in capsys.readouterr().out
    header, rows = _read_csv(out)
    assert header == ["x", "invariantDensity", "leftEdgeDensity", "rightEdgeDensity"]
    xs = np.array([float(r[0]) for r in rows])
    inv = np.array([float(r[1]) for r in rows])
    left = np.array([float(r[2]) for r in rows])
    right = np.array([float(r[3]) for r in rows])
    assert xs[0] == -12.0 and xs[-1] == 12.0
    # near the left wall the scaled edge density tracks the solved density
    sel = xs <= -9.0
    assert np.max(np.abs(inv[sel] - left[sel])) < 5e-4
    sel = xs >= 9.0
    assert np.max(np.abs(inv[sel] - right[sel])) < 5e-4
    # the asymmetric model puts more invariant mass on the right edge map
    assert inv[np.argmin(np.abs(xs + 10.0))] != inv[np.argmin(np.abs(xs - 10.0))]
