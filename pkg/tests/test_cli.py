import csv
import json
import subprocess
import sys

import pytest

from nari.cli import main

WORKED = {"K": 1, "q": [1 / 3, 1 / 3, 1 / 3], "t": [-0.05, 0.0, 0.05], "lambda": 0.6}


def scenario(tmp_path, name="s.json", **extra):
    doc = {"seed": 1, "model": dict(WORKED), **extra}
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(cmd, sc, out, *flags):
    return main([cmd, "--scenario", sc, "--out", str(out), *flags])


def test_solve_worked(tmp_path):
    rc = run("solve", scenario(tmp_path, policy=0.5), tmp_path / "o")
    assert rc == 0
    doc = json.loads((tmp_path / "o" / "solve.json").read_text())
    mL = {k: v["signal"]["mu_L"] for k, v in doc["signals"].items()}
    assert mL["-1"] == pytest.approx(-0.633333, abs=1e-6)
    assert mL["0"] == pytest.approx(-0.833333, abs=1e-6)
    assert doc["assumption2"]["passed"] and "skewness" in doc


def test_solve_assumption_exit(tmp_path, capsys):
    sc = {"seed": 1, "model": {**WORKED, "lambda": 0.4}, "policy": 0.5}
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(sc))
    assert run("solve", str(p), tmp_path / "o") == 2
    diag = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert "posterior at boundary" in diag["message"]


def test_missing_scenario(tmp_path, capsys):
    assert run("solve", str(tmp_path / "nope.json"), tmp_path / "o") == 1
    assert "scenario not found" in capsys.readouterr().err


def test_bad_inputs(tmp_path):
    p = tmp_path / "noseed.json"
    p.write_text(json.dumps({"model": WORKED}))
    assert run("solve", str(p), tmp_path / "o") == 1
    p.write_text("{not json")
    assert run("solve", str(p), tmp_path / "o") == 1
    assert run("solve", scenario(tmp_path), tmp_path / "o") == 1  # no policy
    bad = {"seed": 1, "model": {**WORKED, "q": [0.5, 0.2, 0.3]}, "policy": 0.1}
    p.write_text(json.dumps(bad))
    assert run("solve", str(p), tmp_path / "o") == 1


def test_equilibrium_verify(tmp_path):
    out = tmp_path / "o"
    assert run("equilibrium", scenario(tmp_path), out, "--verify", "--step", "1e-3") == 0
    doc = json.loads((out / "equilibrium.json").read_text())
    assert doc["a_star"] == pytest.approx(0.683333, abs=1e-6) and doc["disciplining"] == [-1]
    assert doc["verification"]["agree"] and doc["verification"]["delta"] <= 1e-3
    sc = scenario(tmp_path, "b.json", technology="broadcast")
    assert run("equilibrium", sc, tmp_path / "b") == 0
    assert json.loads((tmp_path / "b" / "equilibrium.json").read_text())["a_star"] == pytest.approx(0.717129, abs=1e-6)


def test_equilibrium_inconsistent_configuration(tmp_path):
    sc = scenario(tmp_path, configuration="broadcast_star", technology="personalized")
    assert run("equilibrium", sc, tmp_path / "o") == 2


def test_equilibrium_random_configuration(tmp_path):
    sc = scenario(tmp_path, configuration={"random": True})
    assert run("equilibrium", sc, tmp_path / "o") == 0
    assert json.loads((tmp_path / "o" / "equilibrium.json").read_text())["a_star"] >= 0.683333 - 1e-6


def test_latitude(tmp_path):
    sc = scenario(tmp_path, coalitions=[[-1], [0, 1]])
    assert run("latitude", sc, tmp_path / "o") == 0
    lats = json.loads((tmp_path / "o" / "latitude.json").read_text())["latitudes"]
    assert lats[0]["xi"] == pytest.approx(0.683333, abs=1e-6) and len(lats) == 2


def test_sweep(tmp_path):
    sc = scenario(tmp_path, lambdas=[0.55, 0.6, 0.7, 0.9], technologies=["personalized", "broadcast"])
    assert run("sweep", sc, tmp_path / "o") == 0
    rows = list(csv.DictReader((tmp_path / "o" / "sweep.csv").open()))
    assert len(rows) == 8
    for tech in ("personalized", "broadcast"):
        a = [float(r["a_star"]) for r in rows if r["technology"] == tech]
        assert all(y < x for x, y in zip(a, a[1:]))


def test_region_rows(tmp_path):
    sc = scenario(
        tmp_path,
        x_axis={"name": "lambda", "lo": 0.5, "hi": 3.0, "n": 10},
        y_axis={"name": "t1", "lo": 0.01, "hi": 0.5, "n": 10},
    )
    assert run("region", sc, tmp_path / "o") == 0
    lines = (tmp_path / "o" / "region.csv").read_text().splitlines()
    assert lines[0] == "x,y,assumption2,star,doublestar" and len(lines) == 101


def test_compare(tmp_path):
    assert run("compare", scenario(tmp_path), tmp_path / "o") == 0
    doc = json.loads((tmp_path / "o" / "compare.json").read_text())
    assert doc["direction"] == "decrease"
    sc = scenario(tmp_path, "m.json", compare={"kind": "mass_polarization", "q": [0.2, 0.6, 0.2], "q_prime": WORKED["q"]})
    assert run("compare", sc, tmp_path / "m") == 0
    assert json.loads((tmp_path / "m" / "compare.json").read_text())["strict"]
    sc = scenario(tmp_path, "x.json", compare={"kind": "bogus"})
    assert run("compare", sc, tmp_path / "x") == 1


@pytest.mark.parametrize(
    "cmd,extra,artifact",
    [
        ("solve", {"policy": 0.3}, "solve.json"),
        ("equilibrium", {"configuration": {"random": True}}, "equilibrium.json"),
        ("sweep", {"lambdas": [0.6, 0.8]}, "sweep.csv"),
        ("region", {"x_axis": ["lambda", 0.5, 2, 3], "y_axis": ["t1", 0.01, 0.2, 3]}, "region.csv"),
        ("compare", {}, "compare.json"),
    ],
)
def test_byte_identical(tmp_path, cmd, extra, artifact):
    sc = scenario(tmp_path, **extra)
    assert run(cmd, sc, tmp_path / "a") == 0
    assert run(cmd, sc, tmp_path / "b") == 0
    a, b = (tmp_path / "a" / artifact).read_bytes(), (tmp_path / "b" / artifact).read_bytes()
    assert a == b and b"\r\n" not in a


def test_module_entry_point(tmp_path):
    sc = scenario(tmp_path, policy=0.5)
    r = subprocess.run([sys.executable, "-m", "nari", "solve", "--scenario", sc, "--out", str(tmp_path / "o")])
    assert r.returncode == 0
