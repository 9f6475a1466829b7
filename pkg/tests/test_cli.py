import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import oracles
from stochreal import __version__
from stochreal import model as md
from stochreal import serialization as ser
from stochreal.cli import RunConfig, main

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def params_file(tmp_path):
    p = md.random_gum(np.random.default_rng(5), 2, "HMC")
    return write(tmp_path, "params.json", ser.params_to_dict(p, "HMC"))


@pytest.fixture
def series_file(tmp_path):
    return write(tmp_path, "series.json", {"r0": 1.0, "lags": list(0.3 * 0.5 ** np.arange(30))})


def test_classify_white_noise(tmp_path, capsys):
    path = write(tmp_path, "wn.json", {"r0": 1.0, "lags": [0.0] * 20})
    code, out, _ = run(capsys, "classify", path)
    doc = json.loads(out)
    assert code == 0
    assert all(v["realizable"] is True for v in doc["report"]["families"].values())


def test_classify_scalar_example(series_file, capsys):
    code, out, _ = run(capsys, "classify", series_file, "--lags", "20")
    fams = json.loads(out)["report"]["families"]
    assert code == 0
    assert {k: v["realizable"] for k, v in fams.items()} == {
        "GUM": True, "HMC": True, "DGUM": True, "RNN": False}


def test_version_and_tolerances_embedded(series_file, capsys):
    _, out, _ = run(capsys, "realize", series_file, "--tol-psd", "1e-8", "--seed", "4")
    doc = json.loads(out)
    assert doc["version"] == __version__ and doc["tool"] == "stochreal"
    assert doc["config"]["tolerances"] == {"psd": 1e-8, "rank": 1e-9}
    assert doc["config"]["seed"] == 4
    assert doc["diagnostics"]["order"] == 1


def test_simulate_and_seed_env(params_file, capsys, monkeypatch):
    _, a, _ = run(capsys, "simulate", params_file, "-T", "20", "--count", "2")
    monkeypatch.setenv("STOCHREAL_SEED", "0")
    _, b, _ = run(capsys, "simulate", params_file, "-T", "20", "--count", "2")
    monkeypatch.setenv("STOCHREAL_SEED", "17")
    _, c, _ = run(capsys, "simulate", params_file, "-T", "20", "--count", "2")
    assert a == b and a != c
    doc = json.loads(c)
    assert doc["config"]["seed"] == 17
    assert np.asarray(doc["observations"]).shape == (2, 21)


def test_covariance_monte_carlo(params_file, capsys):
    code, out, _ = run(capsys, "covariance", params_file, "--lags", "5",
                       "--monte-carlo", "50", "-T", "500")
    doc = json.loads(out)
    assert code == 0 and len(doc["series"]["lags"]) == 5
    assert len(doc["empirical"]["standard_errors"]) == 6
    assert doc["stationarity"]["stable"] is True


def test_feasibility(tmp_path, capsys):
    path = write(tmp_path, "t.json", {"n": 1, "H": [[1]], "F": [[0.5]], "N": [[0.3]], "r0": 1})
    code, out, _ = run(capsys, "feasibility", path)
    lo, hi = json.loads(out)["summary"]["scalar_interval"]
    assert code == 0
    assert (lo, hi) == pytest.approx(tuple(oracles.xi_roots(1, 0.5, 0.3, 1)), abs=1e-12)


def test_validate(params_file, capsys):
    code, out, _ = run(capsys, "validate", params_file, "-T", "1000")
    assert code == 0 and json.loads(out)["validation"]["ok"] is True


def test_out_file(series_file, tmp_path, capsys):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "realize", series_file, "--out", str(target))
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["command"] == "realize"


def test_unknown_subcommand_exit_2(capsys):
    assert run(capsys, "frobnicate")[0] == 2


def test_bad_window_exit_2(series_file, capsys):
    assert run(capsys, "realize", series_file, "--window", "3")[0] == 2
    assert run(capsys, "realize", series_file, "--window", "6,6", "--lags", "5")[0] == 2


def test_errors_are_json(tmp_path, capsys):
    code, out, err = run(capsys, "classify", str(tmp_path / "missing.json"))
    assert code == 1 and out == ""
    assert json.loads(err)["error"] == "FileNotFoundError"
    bad = write(tmp_path, "unstable.json", {"n": 1, "a": [[1.2]], "b": [[1]], "alpha": [[1]],
                                            "beta": 1})
    code, _, err = run(capsys, "covariance", bad)
    assert code == 1 and json.loads(err)["error"]


def test_run_config_invariants():
    with pytest.raises(ValueError):
        RunConfig(0, 0.0, 1e-9)
    with pytest.raises(ValueError):
        RunConfig(0, 1e-9, 1e-9, window=(4, 4), lags=6)
    assert RunConfig(0, 1e-9, 1e-9, window=(4, 4), lags=7).lags == 7


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "stochreal", "nope"], capture_output=True)
    assert res.returncode == 2


def test_cartography_golden(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code, summary, _ = run(capsys, "cartography", "--r0", "1", "--grid", "11", "--out", str(out))
    assert code == 0 and json.loads(summary)["mismatches"] == []
    rows = list(csv.DictReader(out.open()))
    gold = list(csv.DictReader((DATA / "cartography_grid11_closed.csv").open()))
    assert len(rows) == len(gold) == 121
    for r, g in zip(rows, gold):
        assert (r["F"], r["HN"]) == (g["F"], g["HN"])
        assert float(r["rnn_curve1_dist"]) == pytest.approx(float(g["rnn_curve1_dist"]), abs=1e-15)
        assert float(r["rnn_curve2_dist"]) == pytest.approx(float(g["rnn_curve2_dist"]), abs=1e-15)
        if r["boundary"] == "0":
            assert r["gum"] == g["covariance"] and r["hmc"] == g["hmc"]
            assert r["agree"] == "1"
    curves = json.loads((tmp_path / "grid.curves.json").read_text())
    assert curves["version"] == __version__ and curves["curves"]


def test_cartography_deterministic(tmp_path, capsys):
    outs = []
    for k in range(2):
        path = tmp_path / f"g{k}.csv"
        code, summary, _ = run(capsys, "cartography", "--grid", "15", "--out", str(path),
                               "--curves", str(tmp_path / "curves.json"))
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_cartography_101_closed_columns(tmp_path, capsys):
    out = tmp_path / "grid.csv"
    code, summary, _ = run(capsys, "cartography", "--grid", "101", "--out", str(out))
    doc = json.loads(summary)
    assert code == 0 and doc["cells"] == 101 * 101 and doc["agreement"] == 1.0
    for r in csv.DictReader(out.open()):
        if r["boundary"] == "1":
            continue
        g = oracles.cartography_closed_form(float(r["F"]), float(r["HN"]), 1.0)
        assert r["gum"] == str(int(g["covariance"])) and r["hmc"] == str(int(g["hmc"]))
