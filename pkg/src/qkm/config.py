"""Run configuration: a TOML file of dotted keys.

    model.E = [1.0, 2.0]
    model.r = [1.0, 1.0]
    model.N = 2.0          # optional, defaults to sum(r)
    model.lambda = 0.05
    solver.tol = 1e-12
    series.order = 5
    output.format = "json"

Unknown keys are rejected so that typos do not silently fall back to
defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import InvalidInput
from .spectral import ModelInput, SolverOptions

KNOWN_KEYS = {
    "model": {"E", "r", "N", "lambda"},
    "solver": {"tol", "max_newton", "min_homotopy_step"},
    "series": {"order"},
    "output": {"format", "path"},
    "override": {"eps", "rho"},
    "verify": {"seed", "samples", "threshold"},
    "correlator": {"mode", "formula"},
}

FORMATS = ("json", "csv")


@dataclass
class RunConfig:
    model: ModelInput
    solver: SolverOptions = field(default_factory=SolverOptions)
    series_order: int = 5
    output_format: str = "json"
    output_path: str | None = None
    override_eps: tuple | None = None
    override_rho: tuple | None = None
    verify_seed: int = 0
    verify_samples: int = 20
    verify_threshold: float = 1e-8
    correlator_mode: str = "pair"
    correlator_formula: str = "all"


def _number(section, key, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidInput(f"{section}.{key} must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise InvalidInput(f"{section}.{key} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _numbers(section, key, value):
    if not isinstance(value, list) or not value:
        raise InvalidInput(f"{section}.{key} must be a non-empty list of numbers")
    return tuple(_number(section, key, v) for v in value)


def parse_config(data: dict) -> RunConfig:
    for section, body in data.items():
        if section not in KNOWN_KEYS or not isinstance(body, dict):
            raise InvalidInput(f"unknown config section {section!r}")
        unknown = set(body) - KNOWN_KEYS[section]
        if unknown:
            raise InvalidInput(f"unknown config key(s) {', '.join(f'{section}.{k}' for k in sorted(unknown))}")
    model = data.get("model", {})
    for key in ("E", "r"):
        if key not in model:
            raise InvalidInput(f"model.{key} is required")
    N = _number("model", "N", model["N"]) if "N" in model else None
    lam = _number("model", "lambda", model.get("lambda", 0.0))
    mi = ModelInput(_numbers("model", "E", model["E"]), _numbers("model", "r", model["r"]), N, lam)

    solver = data.get("solver", {})
    opts = SolverOptions(
        tol=_number("solver", "tol", solver.get("tol", 1e-12)),
        max_newton=_number("solver", "max_newton", solver.get("max_newton", 50), int),
        min_homotopy_step=_number("solver", "min_homotopy_step", solver.get("min_homotopy_step", 1e-6)),
    )
    if not opts.tol > 0 or opts.max_newton < 1 or not 0 < opts.min_homotopy_step < 1:
        raise InvalidInput("solver options out of range (tol > 0, max_newton >= 1, 0 < min_homotopy_step < 1)")

    order = _number("series", "order", data.get("series", {}).get("order", 5), int)
    if not 0 <= order <= 12:
        raise InvalidInput("series.order must lie in 0..12")

    output = data.get("output", {})
    fmt = output.get("format", "json")
    if fmt not in FORMATS:
        raise InvalidInput(f"output.format must be one of {FORMATS}, got {fmt!r}")
    path = output.get("path")
    if path is not None and not isinstance(path, str):
        raise InvalidInput("output.path must be a string")

    override = data.get("override", {})
    o_eps = _numbers("override", "eps", override["eps"]) if "eps" in override else None
    o_rho = _numbers("override", "rho", override["rho"]) if "rho" in override else None
    for name, val in (("eps", o_eps), ("rho", o_rho)):
        if val is not None and len(val) != mi.d:
            raise InvalidInput(f"override.{name} must have {mi.d} entries")

    verify = data.get("verify", {})
    corr = data.get("correlator", {})
    return RunConfig(
        model=mi,
        solver=opts,
        series_order=order,
        output_format=fmt,
        output_path=path,
        override_eps=o_eps,
        override_rho=o_rho,
        verify_seed=_number("verify", "seed", verify.get("seed", 0), int),
        verify_samples=_number("verify", "samples", verify.get("samples", 20), int),
        verify_threshold=_number("verify", "threshold", verify.get("threshold", 1e-8)),
        correlator_mode=str(corr.get("mode", "pair")),
        correlator_formula=str(corr.get("formula", "all")),
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise InvalidInput(f"cannot read config {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise InvalidInput(f"malformed config {path}: {exc}") from exc
    return parse_config(data)
