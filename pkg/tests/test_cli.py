import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from polylam.cli import main
from polylam.linalg import CrystalSpectrum
from polylam.t2set import branch_residual

S_ARG = "0.2,0.3,0.5"


def run(*args, check=True):
    proc = subprocess.run([sys.executable, "-m", "polylam", *args], capture_output=True, text=True)
    if check:
        assert proc.returncode == 0, proc.stderr
    return proc


def table(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def summary(text):
    line = next(l for l in text.splitlines() if l.startswith("# summary: "))
    return json.loads(line[len("# summary: "):])


def test_connect_values_and_exit_codes():
    doc = json.loads(run("connect", "--s", S_ARG, "--t", S_ARG, "--lambda", "2/3").stdout)
    assert np.allclose(doc["n_squares"], [11 / 12, 0, 1 / 12], atol=1e-12)
    assert doc["residual"] < 1e-9
    assert run("connect", "--s", S_ARG, "--t", S_ARG, "--lambda", "1", check=False).returncode == 3
    assert run("connect", "--s", "0.3,0.2,0.5", "--t", S_ARG, check=False).returncode == 2
    assert run("connect", "--s", "0.2,0.3,0.6", "--t", S_ARG, check=False).returncode == 2


def test_in_process_main_matches_exit_codes(capsys):
    assert main(["connect", "--s", S_ARG, "--t", S_ARG, "--lambda", "1"]) == 3
    assert "error:" in capsys.readouterr().err


def test_t2_rows_satisfy_branch_equation():
    out = run("t2", "--s", S_ARG, "--count", "9").stdout
    rows = table(out)
    assert len(rows) == 18
    assert [float(rows[0][c]) for c in ("t1", "t2", "t3")] == [0.2, 0.3, 0.5]
    S = CrystalSpectrum(0.2, 0.3, 0.5)
    for r in rows:
        t = np.array([float(r[c]) for c in ("t1", "t2", "t3")])
        assert abs(branch_residual(t, S, r["branch"])) < 1e-10


def test_laminate_generations():
    doc = json.loads(run("laminate", "--s", S_ARG, "--kmax", "12", "--r", "2").stdout)
    gens = doc["generations"]
    assert len(gens) == 13
    q = doc["schedule"]["q"]
    for g in gens:
        assert g["barycenter_drift"] < 1e-10
        assert g["residual_mass"] == pytest.approx(0.5 * q ** g["k"], abs=1e-12)
        assert g["mass_outside"] == pytest.approx(g["residual_mass"], abs=1e-12)
    beta = json.loads(run("laminate", "--s", S_ARG, "--branch", "beta", "--kmax", "2").stdout)
    assert beta["schedule"]["r_bar"] is None


def test_region_output():
    out = run("region", "--s", S_ARG, "--count", "64", "--compare-nm").stdout
    rows = table(out)
    first = [float(rows[0][c]) for c in ("x", "y")]
    last = [float(rows[-1][c]) for c in ("x", "y")]
    assert first == last
    assert len(rows) == 12 * 63 + 1
    info = summary(out)
    assert info["inclusion_ok"] is True and info["min_clearance"] > 0
    assert info["u_alpha"] < info["v_alpha"] < info["v_beta"] < info["u_beta"]


def test_polycrystal_output():
    out = run("polycrystal", "--sigma", "4,2,1", "--count", "10").stdout
    theta = float(next(l for l in out.splitlines() if l.startswith("# theta = ")).split("=")[1])
    assert abs(2 * theta ** 3 + 7 * theta ** 2 - 8) < 1e-12
    rows = table(out)
    assert len(rows) == 10
    star = np.array([[float(r[f"sigma{i}_star"]) for i in (1, 2, 3)] for r in rows])
    res = np.array([float(r["bound_residual"]) for r in rows])
    assert np.all(np.abs(res) <= 1e-9 * star.prod(axis=1))
    assert np.allclose(star[0], [4, 2, 1], rtol=1e-10)
    assert run("polycrystal", "--sigma", "1,2,4", check=False).returncode == 2


def test_identities_csv_parses():
    rows = table(run("identities", "--s", S_ARG, "--random", "3", "--seed", "5").stdout)
    assert len(rows) == 4 * 12
    assert all(float(r["residual"]) < 1e-12 for r in rows)


def test_determinism_json_and_out(tmp_path):
    args = ("region", "--s", S_ARG, "--count", "32")
    assert run(*args).stdout == run(*args).stdout
    target = tmp_path / "region.json"
    run(*args, "--format", "json", "--out", str(target))
    doc = json.loads(target.read_text())
    assert len(doc["rows"]) == 12 * 31 + 1
    assert doc["meta"][0].startswith("polylam")
