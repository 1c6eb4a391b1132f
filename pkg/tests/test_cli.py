import json
import subprocess
import sys

import numpy as np
import pytest

from patchdipole.cli import EXIT_GATE, EXIT_INPUT, EXIT_NOCONV, EXIT_OK, run_cli
from patchdipole.grid import read_profile_csv, write_profile_csv


@pytest.fixture(scope="module")
def terminal_csv(terminal, tmp_path_factory):
    return write_profile_csv(terminal, tmp_path_factory.mktemp("prof") / "terminal.csv")


def test_help_and_unknown_command(capsys):
    assert run_cli(["--help"]) == EXIT_OK
    assert run_cli(["frobnicate"]) == EXIT_INPUT


def test_solve_exit_codes(tmp_path):
    out = tmp_path / "a"
    assert run_cli(["solve", "--seed", "fig2b", "--tol", "1", "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "profile_report.json").read_text())
    assert rep["converged"] and rep["iterations"] == 0
    assert (out / "profile.csv").is_file()
    out = tmp_path / "b"
    assert run_cli(["solve", "--max-iter", "3", "--out", str(out)]) == EXIT_NOCONV
    assert json.loads((out / "profile_report.json").read_text())["status"] == "max_iter"


def test_bad_inputs(tmp_path):
    assert run_cli(["solve", "--seed", "nonsense", "--out", str(tmp_path)]) == EXIT_INPUT
    assert run_cli(["verify", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) \
        == EXIT_INPUT
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run_cli(["--config", str(cfg), "solve", "--out", str(tmp_path)]) == EXIT_INPUT
    cfg.write_text(json.dumps({"damping": 7}))
    assert run_cli(["--config", str(cfg), "solve", "--out", str(tmp_path)]) == EXIT_INPUT
    bad = tmp_path / "bad.csv"
    bad.write_text("x,f\n0,abc\n1,0\n")
    assert run_cli(["verify", str(bad), "--out", str(tmp_path)]) == EXIT_INPUT
    rough = tmp_path / "rough.csv"
    rough.write_text("x,f\n0,1\n0.5,2\n1,0\n")
    assert run_cli(["verify", str(rough), "--out", str(tmp_path)]) == EXIT_GATE


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_iter": 2, "grid_n": 48, "tol": 1e-12}))
    out = tmp_path / "o"
    assert run_cli(["--config", str(cfg), "solve", "--max-iter", "1", "--out", str(out)]) \
        == EXIT_NOCONV
    rep = json.loads((out / "profile_report.json").read_text())
    assert rep["iterations"] == 1
    assert rep["params"]["grid_n"] == 48 and rep["params"]["max_iter"] == 1


def test_verify(terminal_csv, tmp_path, semi):
    assert run_cli(["verify", str(terminal_csv), "--out", str(tmp_path)]) == EXIT_OK
    names = {r["name"] for r in json.loads((tmp_path / "diagnostics.json").read_text())}
    assert "boundary_condition" in names
    semi_csv = write_profile_csv(semi, tmp_path / "semi.csv")
    assert run_cli(["verify", str(semi_csv), "--out", str(tmp_path / "s")]) == EXIT_GATE


def test_field_outputs_are_deterministic(terminal_csv, tmp_path):
    args = ["field", str(terminal_csv), "--bbox", "-1.5,1.5,-1.2,1.2", "--resolution", "24,20",
            "--svg"]
    assert run_cli(args + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert run_cli(args + ["--out", str(tmp_path / "b")]) == EXIT_OK
    for name in ("field.csv", "contours.json", "field.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert run_cli(["field", str(terminal_csv), "--bbox", "1,2,3", "--out",
                    str(tmp_path)]) == EXIT_INPUT
    assert run_cli(["field", str(terminal_csv), "--levels", "-0.05,0,0.05", "--resolution",
                    "16,16", "--out", str(tmp_path / "c")]) == EXIT_OK
    assert len(json.loads((tmp_path / "c" / "contours.json").read_text())) == 3


def test_oracle(tmp_path, terminal_csv):
    assert run_cli(["oracle", str(terminal_csv), "--out", str(tmp_path)]) == EXIT_OK
    res = json.loads((tmp_path / "oracle.json").read_text())
    assert [r["profile"] for r in res] == ["semicircle", "tent", "profile"]
    assert all(r["passed"] for r in res)


def test_export_round_trip(terminal_csv, tmp_path):
    js = tmp_path / "t.json"
    back = tmp_path / "t.csv"
    assert run_cli(["export", str(terminal_csv), "--format", "json", "--output", str(js)]) == 0
    assert run_cli(["export", str(js), "--format", "csv", "--output", str(back)]) == 0
    assert back.read_bytes() == terminal_csv.read_bytes()
    f = read_profile_csv(back)
    assert np.all(np.diff(f.half_values) <= 0)


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "patchdipole.cli", "solve", "--tol", "1",
                        "--grid-n", "32", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert "converged" in r.stdout
