import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from protmeas.cli import CSV_HEADER, config_argv, dumps, run


def invoke(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def invoke_json(*argv):
    code, out, err = invoke(*argv)
    assert code == 0, err
    return json.loads(out)


def test_protect_alpha_zero():
    rec = invoke_json("protect", "--alpha-sq", "0", "--b0", "1", "--ea", "0.5", "--T", "100",
                      "--axis", "z", "--profile", "constant", "--out", "json")
    assert rec["schema_version"] == "1"
    assert rec["command"] == "protect"
    assert abs(rec["outputs"]["expectation_estimate"]) < 1e-9
    assert rec["config"]["alpha_sq"] == 0.0
    assert rec["timing"]["wall_seconds"] >= 0


def test_protect_validation_names_flag(capsys):
    code, out, err = invoke("protect", "--alpha-sq", "1.5")
    assert code == 2 and out == ""
    assert "alpha-sq" in err and len(err.strip().splitlines()) == 1
    code, _, err = invoke("protect", "--T", "0")
    assert code == 2 and "--T" in err
    code, _, err = invoke("protect", "--T", "-5")
    assert code == 2 and "--T" in err


def test_unknown_flag(capsys):
    code, _, _ = invoke("protect", "--bogus", "1")
    assert code == 2
    assert "--bogus" in capsys.readouterr().err


def test_abbreviated_flag_rejected(capsys):
    code, _, _ = invoke("protect", "--alpha", "0.2")
    assert code == 2


def test_missing_command(capsys):
    assert invoke()[0] == 2


def test_brute_limit_named():
    code, _, err = invoke("ensemble", "--n-list", "2,11", "--brute")
    assert code == 2 and "n-list" in err


def test_internal_error_exit_code(monkeypatch):
    import protmeas.cli as cli

    def boom(args):
        raise RuntimeError("broken")

    monkeypatch.setitem(cli.COMMANDS, "perturb", boom)
    code, _, err = invoke("perturb", "--a-i", "1")
    assert code == 1 and "internal error" in err


def test_sweep_monotone_theta_error():
    rec = invoke_json("sweep-t", "--alpha-sq", "0.3", "--t-min", "100", "--t-max", "3200",
                      "--points", "6", "--log")
    rows = rec["outputs"]["rows"]
    ts = [r["T"] for r in rows]
    assert np.allclose(ts, np.geomspace(100, 3200, 6))
    errs = [r["theta_error"] for r in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_sweep_concurrent_rows_sorted():
    serial = invoke_json("sweep-t", "--t-min", "50", "--t-max", "400", "--points", "5")
    parallel = invoke_json("sweep-t", "--t-min", "50", "--t-max", "400", "--points", "5",
                           "--workers", "4")
    assert serial["outputs"] == parallel["outputs"]


def test_csv_matches_json():
    argv = ["sweep-t", "--alpha-sq", "0.3", "--t-min", "100", "--t-max", "800", "--points", "4", "--log"]
    rec = invoke_json(*argv, "--out", "json")
    code, text, _ = invoke(*argv, "--out", "csv")
    assert code == 0
    reader = list(csv.reader(io.StringIO(text)))
    assert tuple(reader[0]) == CSV_HEADER
    assert len(reader) == 1 + len(rec["outputs"]["rows"])
    for line, row in zip(reader[1:], rec["outputs"]["rows"]):
        for key, value in zip(CSV_HEADER, line):
            assert float(value) == row[key]


def test_protect_csv_matches_json():
    rec = invoke_json("protect", "--alpha-sq", "0.6", "--T", "300")
    code, text, _ = invoke("protect", "--alpha-sq", "0.6", "--T", "300", "--out", "csv")
    header, values = list(csv.reader(io.StringIO(text)))
    for key, value in zip(header, values):
        assert float(value) == rec["outputs"][key]


@pytest.mark.parametrize("argv", [
    ["protect", "--alpha-sq", "0.37", "--rel-phase", "0.4", "--T", "250.5", "--axis", "x"],
    ["protect", "--alpha-sq", "0.2", "--T", "150", "--profile", "cosine-ramp", "--ramp-frac", "0.2",
     "--steps", "3000"],
    ["perturb", "--a-i", "1", "--T", "77", "--b0", "1.3"],
    ["reconstruct", "--alpha-sq", "0.6", "--rel-phase", "1.0", "--T", "500"],
    ["ensemble", "--alpha-sq", "0.3", "--n-list", "1,2,3", "--brute", "--T", "400"],
    ["impulsive", "--alpha-sq", "0.4", "--shots", "500", "--seed", "7"],
])
def test_config_round_trip(argv):
    first = invoke_json(*argv)
    second = invoke_json(*config_argv(first["command"], first["config"]))
    assert second["config"] == first["config"]

    def compare(a, b):
        if isinstance(a, dict):
            assert a.keys() == b.keys()
            for k in a:
                compare(a[k], b[k])
        elif isinstance(a, list):
            assert len(a) == len(b)
            for x, y in zip(a, b):
                compare(x, y)
        elif isinstance(a, float):
            assert abs(a - b) <= 1e-12
        else:
            assert a == b

    compare(first["outputs"], second["outputs"])
    assert first["generator"] == second["generator"]


def test_impulsive_record():
    rec = invoke_json("impulsive", "--alpha-sq", "0.5", "--shots", "100000", "--seed", "3")
    counts = rec["outputs"]["counts"]
    assert counts["n_up"] + counts["n_down"] == 100000
    assert abs(counts["n_up"] / 1e5 - 0.5) < 0.005
    assert rec["generator"]["algorithm"] == "numpy.random.Philox"
    assert rec["generator"]["seed"] == 3


def test_ensemble_record_with_fit():
    rec = invoke_json("ensemble", "--alpha-sq", "0.3", "--n-list", "4,16,64,256,1024")
    assert abs(rec["outputs"]["fit"]["slope"] + 0.5) < 0.05
    assert [r["n"] for r in rec["outputs"]["results"]] == [4, 16, 64, 256, 1024]


def test_ensemble_bad_list():
    code, _, err = invoke("ensemble", "--n-list", "a,b")
    assert code == 2 and "n-list" in err


def test_perturb_record():
    rec = invoke_json("perturb", "--a-i", "0", "--T", "100")
    assert rec["outputs"]["exact_energies"] == [-0.5, 1.5]


def test_shots_mode_generator_metadata():
    rec = invoke_json("protect", "--shots", "1000", "--seed", "11")
    assert rec["generator"]["seed"] == 11
    assert rec["generator"]["shots"] == 1000


def test_steps_zero_needs_constant():
    code, _, err = invoke("protect", "--profile", "cosine-ramp", "--steps", "0")
    assert code == 2 and "steps" in err


def test_dumps_precision():
    text = dumps({"x": 0.1, "y": 1.0, "z": [1 / 3]})
    data = json.loads(text)
    assert data["x"] == 0.1 and data["z"][0] == 1 / 3
    assert "0.33333333333333331" in text and '"y": 1.0' in text


def test_help_documents_units(capsys):
    code, _, _ = invoke("protect", "--help")
    assert code == 0
    assert "hbar = 1" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "protmeas", "perturb", "--a-i", "1", "--T", "50"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "perturb"
