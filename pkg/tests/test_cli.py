import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from carsep import statespec
from carsep.cli import main
from carsep.named_states import make_rho_one

LOG2 = np.log(2)


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_usage_errors(tmp_path, capsys):
    assert run()[0] == 2
    assert run("bogus")[0] == 2
    assert run("analyze", "nope")[0] == 2
    assert run("analyze", "phi_lambda", "--param", "lambda=3")[0] == 2
    assert run("analyze", "phi_lambda", "--param", "lambda")[0] == 2
    assert run("analyze", "rho_one", "--partition", "1:3")[0] == 2
    assert run("analyze", "rho_one", "--partition", "1,2,3")[0] == 2
    assert run("analyze", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert run("analyze", str(bad))[0] == 2
    assert run("sweep", "phi-lambda", "--to", "2")[0] == 2
    assert run("inequality-scan", "--trials", "0")[0] == 2
    assert "error" in capsys.readouterr().err


def test_analyze_varrho(tmp_path):
    path = tmp_path / "varrho.json"
    code, text = run("analyze", "varrho", "--out", str(path))
    assert code == 0
    assert "0.69314718056" in text
    rep = json.loads(path.read_text())
    assert rep["entropies"]["S_I"] == 0
    assert abs(rep["entropies"]["S_J"] - LOG2) < 1e-10
    assert abs(rep["roofs"]["E_avr"]["value"] - LOG2 / 2) < 1e-10
    assert "E_T" not in rep["roofs"]
    assert rep["car"]["verdict"] == "nonseparable"


def test_analyze_state_file(tmp_path):
    spec = tmp_path / "rho.json"
    statespec.write_state(spec, make_rho_one())
    out = tmp_path / "rep.json"
    code, _ = run("analyze", str(spec), "--partition", "2:1", "--out", str(out), "--restarts", "4")
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["partition"] == {"I": [2], "J": [1]}
    assert abs(rep["witness"]["max_violation"] - 0.25) < 1e-12
    assert rep["ppt"]["verdict"] == "separable"
    assert "E_T" in rep["roofs"]
    assert run("analyze", str(spec), "--param", "x=1")[0] == 2


def test_analyze_is_deterministic(tmp_path):
    paths = [tmp_path / f"r{i}.json" for i in range(2)]
    for p in paths:
        assert run("analyze", "phi_lambda", "--param", "lambda=0.5", "--restarts", "4", "--out", str(p), "--quiet")[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_sweep_table_and_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    code, text = run("sweep", "phi-lambda", "--from", "-1", "--to", "1", "--steps", "3", "--restarts", "4", "--out", str(path))
    assert code == 0 and "ppt_verdict" in text
    rows = list(csv.DictReader(path.open()))
    assert [float(r["lam"]) for r in rows] == [-1, 0, 1]
    last = rows[-1]
    assert abs(float(last["witness"]) - 0.125) < 1e-12
    assert last["ppt_verdict"] == "separable"
    assert all(len(r["E_T"].split("e")[0].replace("-", "").replace(".", "").lstrip("0")) <= 12 for r in rows)


def test_sweep_workers_match_serial(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("sweep", "phi-lambda", "--steps", "3", "--restarts", "2", "--out", str(a))
    run("sweep", "phi-lambda", "--steps", "3", "--restarts", "2", "--out", str(b), "--workers", "2")
    assert a.read_bytes() == b.read_bytes()


def test_inequality_scan(tmp_path):
    path = tmp_path / "scan.json"
    code, text = run("inequality-scan", "--seed", "3", "--trials", "2", "--restarts", "4", "--out", str(path))
    assert code == 0
    assert "minimal E_T - E_avr gap" in text
    rep = json.loads(path.read_text())
    assert rep["summary"]["violations"] == [] and len(rep["records"]) == 2
    code, _ = run("inequality-scan", "--trials", "2", "--noneven", "--restarts", "4")
    assert code == 0


def test_seed_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("CARSEP_SEED", "5")
    path = tmp_path / "s.json"
    run("inequality-scan", "--trials", "1", "--restarts", "2", "--out", str(path))
    assert json.loads(path.read_text())["seed"] == 5
    monkeypatch.setenv("CARSEP_SEED", "five")
    assert run("verify", "--only", "car_relations")[0] == 2


def test_verify_subset(tmp_path):
    path = tmp_path / "v.json"
    code, text = run("verify", "--only", "car_relations", "lam1_correlations", "--out", str(path))
    assert code == 0 and "2/2 checks passed" in text
    assert all(c["passed"] for c in json.loads(path.read_text())["checks"])
    assert run("verify", "--only", "nothing")[0] == 2


@pytest.mark.slow
def test_verify_full_suite_exits_zero():
    proc = subprocess.run([sys.executable, "-m", "carsep", "verify"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "25/25 checks passed" in proc.stdout
