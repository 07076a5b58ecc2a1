import pytest

from qkm.config import load_config, parse_config
from qkm.errors import InvalidInput

BASE = {"model": {"E": [1.0, 2.0], "r": [1.0, 1.0], "lambda": 0.05}}


def test_defaults():
    cfg = parse_config(BASE)
    assert cfg.model.N == 2.0 and cfg.model.lam == 0.05
    assert cfg.series_order == 5 and cfg.output_format == "json"
    assert cfg.solver.tol == 1e-12 and cfg.override_eps is None


def test_load_toml(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('model.E = [1.0, 2.0]\nmodel.r = [1, 1]\nmodel.N = 2\nmodel.lambda = 0.05\n'
                 'series.order = 3\noutput.format = "csv"\nsolver.tol = 1e-13\n')
    cfg = load_config(p)
    assert cfg.model.r == (1.0, 1.0) and cfg.series_order == 3
    assert cfg.output_format == "csv" and cfg.solver.tol == 1e-13


@pytest.mark.parametrize("data", [
    {"model": {"E": [1.0], "r": [1.0], "lamda": 0.1}},
    {"modle": {"E": [1.0]}},
    {"model": {"E": [1.0]}},
    {"model": {"E": [1.0], "r": [1.0], "lambda": "0.1"}},
    {"model": {"E": [1.0], "r": [1.0], "lambda": True}},
    {"model": {"E": [], "r": []}},
    {"model": {"E": [1.0, 1.0], "r": [1.0, 1.0]}},
    {**BASE, "series": {"order": 2.5}},
    {**BASE, "series": {"order": 40}},
    {**BASE, "output": {"format": "xml"}},
    {**BASE, "solver": {"tol": -1.0}},
    {**BASE, "override": {"eps": [1.0]}},
])
def test_rejects(data):
    with pytest.raises(InvalidInput):
        parse_config(data)


def test_override_and_verify_sections():
    cfg = parse_config({**BASE, "override": {"eps": [1.0, 2.0], "rho": [1.0, 1.0]},
                        "verify": {"seed": 4, "samples": 7, "threshold": 1e-9}})
    assert cfg.override_eps == (1.0, 2.0) and cfg.verify_samples == 7 and cfg.verify_seed == 4


def test_load_errors(tmp_path):
    with pytest.raises(InvalidInput):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("model.E = [1.0,\n")
    with pytest.raises(InvalidInput):
        load_config(bad)
