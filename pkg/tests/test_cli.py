import json
import subprocess
import sys

import numpy as np
import pytest

from hrcmc.catenoid import CatenoidParams
from hrcmc.cli import build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_geometry(capsys):
    code, out, err = run(capsys, "verify", "geometry")
    assert code == 0
    rep = json.loads(out)
    assert rep["passed"]
    assert all(r["pass"] for r in rep["records"])
    assert "PASS" in err


def test_verify_output_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "verify", "geometry", "--out", str(a))[0] == 0
    assert run(capsys, "verify", "geometry", "--out", str(b))[0] == 0
    assert (a / "verify_geometry.json").read_bytes() == (b / "verify_geometry.json").read_bytes()


def test_verify_csv(capsys):
    code, out, _ = run(capsys, "verify", "geometry", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0].startswith("tag,")


def test_failing_suite_exits_one(capsys):
    # a tolerance below rounding cannot be met by the Newton iteration
    code, _, err = run(capsys, "verify", "graph", "--tol", "1e-20")
    assert code == 1
    assert "FAIL" in err


def test_bad_config_exits_two(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, "verify", "geometry", "--config", str(cfg))
    assert code == 2
    assert "bogus" in err
    cfg.write_text("{not json")
    assert run(capsys, "verify", "geometry", "--config", str(cfg))[0] == 2
    assert run(capsys, "verify", "geometry", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_config_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"alpha": 8.0}))
    code, out, _ = run(capsys, "spectrum", "--config", str(cfg))
    assert code == 0 and json.loads(out)["alpha"] == 8.0
    code, out, _ = run(capsys, "spectrum", "--config", str(cfg), "--alpha", "4")
    assert json.loads(out)["alpha"] == 4.0


def test_usage_error():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["verify", "nope"])
    assert exc.value.code == 2


def test_spectrum(capsys):
    code, out, _ = run(capsys, "spectrum", "--alpha", "4", "--format", "csv")
    assert code == 0
    rows = np.loadtxt(out.splitlines()[1:], delimiter=",")
    # lambda_1 = -(1 + eps)^2 exactly; gamma_n = sqrt(-lambda_n) for n >= 1
    eps = CatenoidParams(4.0).epsilon
    assert rows[1, 1] == pytest.approx(-(1 + eps) ** 2, abs=1e-10)
    assert np.all(np.diff(rows[:, 1]) < 0)
    np.testing.assert_allclose(rows[1:, 2], np.sqrt(-rows[1:, 1]), rtol=1e-10)


def test_mesh(capsys, tmp_path):
    code, out, _ = run(capsys, "mesh", "--alpha", "2", "--grid", "16", "--format", "obj", "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "catenoid_uhp.obj").read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == 16 * 17
    assert out.strip().endswith("catenoid_uhp.obj")


def test_sweep(capsys):
    code, out, _ = run(capsys, "sweep", "--parameter", "alpha", "--values", "4", "8", "--suite", "spectral")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split(",")[0] == "alpha"
    assert len(lines) == 3


def test_solve_end(capsys):
    code, out, _ = run(capsys, "solve-end", "--epsilon", "0.05")
    assert code == 0
    rep = json.loads(out)
    assert rep["final_H_deviation"] < 1e-8


def test_solve_graph(capsys, tmp_path):
    dom = tmp_path / "d.json"
    dom.write_text(json.dumps({"r": 1.0, "holes": [{"x": 0.0, "r": 0.3}], "h": 1 / 32}))
    code, out, _ = run(capsys, "solve-graph", "--domain", str(dom), "--psi-out", "0.05", "--psi-in", "0.0")
    assert code == 0
    rep = json.loads(out)
    assert rep["residuals"][-1] < 1e-8
    assert 1.0 <= rep["g_min"] <= rep["g_max"] <= 1.05 + 1e-12


def test_solve_graph_precondition(capsys):
    code, _, err = run(capsys, "solve-graph", "--grid", "16", "--psi-out", "0.5")
    assert code == 2
    assert "smallness" in err


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "hrcmc.cli", "spectrum", "--alpha", "4"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["alpha"] == 4.0
