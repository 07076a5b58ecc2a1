import csv
import io
import json
from pathlib import Path

import pytest

from qkm import cli
from qkm.config import load_config
from qkm.errors import ChamberExit

GOLDEN = Path(__file__).parent / "golden"
CONFIG = str(GOLDEN / "d2.toml")


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


# ---------------------------------------------------------------- golden files


@pytest.mark.parametrize("argv, golden", [
    (["solve"], "solve.json"),
    (["verify"], "verify.json"),
    (["sweep", "--lambda-grid", "0:0.1:0.01"], "sweep.csv"),
])
def test_golden(capsys, argv, golden):
    code, out, _ = run(capsys, argv[0], "--config", CONFIG, *argv[1:])
    assert code == 0
    assert out.encode() == (GOLDEN / golden).read_bytes()


def test_out_file(tmp_path, capsys):
    out = tmp_path / "solve.json"
    assert cli.run(["solve", "--config", CONFIG, "--out", str(out)]) == 0
    assert out.read_bytes() == (GOLDEN / "solve.json").read_bytes()


# ---------------------------------------------------------------- commands


def test_solve_csv(capsys):
    code, out, _ = run(capsys, "solve", "--config", CONFIG, "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0][:3] == ["k", "E", "r"] and len(rows) == 3
    assert "\r\n" in out


def test_series_json(capsys):
    code, out, _ = run(capsys, "series", "--config", CONFIG)
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1 and doc["order"] == 5
    assert doc["deviation"]["max_residual"] < 1e-8
    assert doc["eps"][0][0] == 1.0


def test_series_csv(capsys):
    code, out, _ = run(capsys, "series", "--config", CONFIG, "--format", "csv")
    assert code == 0 and out.startswith("series,k,l,order,coefficient")


def test_correlator_modes(tmp_path, capsys):
    pts = write(tmp_path, "pts.csv", "z_re,z_im,w_re,w_im\n1.0,0.5,2.0,-0.3\n1.0,0.0,-1.0,0.0\n1.5,0.2,1.5,0.2\n")
    code, out, _ = run(capsys, "correlator", "--config", CONFIG, "--points", pts, "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert rows[0]["status"] == "ok" and float(rows[0]["spread"]) < 1e-8
    assert rows[1]["status"].startswith("SINGULAR")
    code, out, _ = run(capsys, "correlator", "--config", CONFIG, "--points", pts, "--mode", "oneone")
    doc = json.loads(out)
    assert code == 0 and [r["status"] == "ok" for r in doc["rows"]] == [True, False, True]
    code, out, _ = run(capsys, "correlator", "--config", CONFIG, "--points", pts, "--mode", "diag",
                       "--formula", "symm")
    assert code == 0


def test_correlator_all_singular(tmp_path, capsys):
    pts = write(tmp_path, "pts.csv", "1.0,0.0,-1.0,0.0\n")
    code, _, _ = run(capsys, "correlator", "--config", CONFIG, "--points", pts)
    assert code == 3


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and out.count("PASS") == len(out.splitlines())


def test_lambda_grid():
    assert cli.parse_lambda_grid("0:0.1:0.01")[-1] == 0.1
    assert cli.parse_lambda_grid("0:0.1:0.01")[3] == 0.03
    assert cli.parse_lambda_grid("0.05") == [0.05]
    for bad in ("a:b", "0:1", "1:0:0.1", "0:1:0", "-1"):
        with pytest.raises(cli.InvalidInput):
            cli.parse_lambda_grid(bad)


def test_sweep_monotone(capsys):
    code, out, _ = run(capsys, "sweep", "--config", CONFIG, "--lambda-grid", "0.01:0.1:0.01")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 10
    eps = [float(r["eps_1"]) for r in rows]
    rho = [float(r["rho_1"]) for r in rows]
    assert all(a < b for a, b in zip(eps, eps[1:]))
    assert all(a > b for a, b in zip(rho, rho[1:]))


def test_sweep_failed_rows():
    cfg = load_config(CONFIG)

    def flaky(cfg, lam):
        if lam > 0.05:
            return None, f"FAILED: {ChamberExit.__name__}"
        return cli._sweep_row(cfg, lam)

    text, code = cli.cmd_sweep(cfg, [0.0, 0.05, 0.1], "csv", solve_row=flaky)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert code == 0
    assert [r["status"] for r in rows] == ["ok", "ok", "FAILED: ChamberExit"]
    assert rows[2]["eps_1"] == ""
    text, code = cli.cmd_sweep(cfg, [0.1], "json", solve_row=flaky)
    assert code == 2 and json.loads(text)["rows"][0]["status"] == "FAILED: ChamberExit"


def test_threads_env(monkeypatch):
    monkeypatch.setenv("QKM_THREADS", "2")
    assert cli._threads(10) == 2
    monkeypatch.setenv("QKM_THREADS", "zero")
    with pytest.raises(cli.InvalidInput):
        cli._threads(10)


# ---------------------------------------------------------------- exit codes


def test_exit_invalid_config(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", "model.E = [1.0, 1.0]\nmodel.r = [1.0, 1.0]\n")
    code, _, err = run(capsys, "solve", "--config", cfg)
    assert code == 3 and "invalid input" in err


def test_exit_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.run(["frobnicate"])
    assert exc.value.code == 3
    with pytest.raises(SystemExit) as exc:
        cli.run(["solve"])
    assert exc.value.code == 3


def test_exit_convergence(tmp_path, capsys):
    cfg = write(tmp_path, "tight.toml", Path(CONFIG).read_text() + "solver.tol = 1e-30\n")
    code, _, err = run(capsys, "solve", "--config", cfg)
    assert code == 2 and "Divergence" in err


def test_exit_verification(tmp_path, capsys):
    cfg = write(tmp_path, "corrupt.toml", Path(CONFIG).read_text() + "override.eps = [1.0204, 2.0143467472946917]\n")
    code, out, err = run(capsys, "verify", "--config", cfg)
    assert code == 4 and "verification failed" in err
    assert json.loads(out)["passed"] is False


def test_main_exits(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["solve", "--config", CONFIG])
    assert exc.value.code == 0
