"""Command line front-end.

    qkm solve       --config run.toml
    qkm correlator  --config run.toml --points pts.csv --mode pair
    qkm verify      --config run.toml
    qkm series      --config run.toml
    qkm sweep       --config run.toml --lambda-grid 0:0.1:0.01
    qkm selftest

Exit codes: 0 success, 2 convergence failure, 3 invalid input (including
command line usage errors), 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal, InvalidOperation

import numpy as np

from . import __version__
from .config import FORMATS, RunConfig, load_config
from .correlators import G0_diag, G0_oneone, G0_pair, G_matrix
from .curve import alpha_roots
from .errors import InvalidInput, QKMError, SingularPoint
from .spectral import ModelInput, SpectralData, residuals, series_spectral, solve_spectral

EXIT_OK = 0
EXIT_CONVERGENCE = 2
EXIT_INVALID = 3
EXIT_VERIFY = 4

SCHEMA = 1
MODES = ("pair", "diag", "oneone")


class _Parser(argparse.ArgumentParser):
    """Usage errors are invalid input (3), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------ helpers


def _alpha(S: SpectralData) -> list:
    if S.input.coupling == 0.0:
        return sorted(S.eps)
    return list(alpha_roots(S.curve).alpha)


def _input_doc(m: ModelInput) -> dict:
    return {"E": list(m.E), "r": list(m.r), "N": m.N, "lambda": m.lam}


def _solve(cfg: RunConfig) -> SpectralData:
    S = solve_spectral(cfg.model, cfg.solver)
    if cfg.override_eps is None and cfg.override_rho is None:
        return S
    eps = cfg.override_eps or S.eps
    rho = cfg.override_rho or S.rho
    f, g = residuals(cfg.model, eps, rho)
    res = float(max(np.max(np.abs(f)), np.max(np.abs(g))))
    return SpectralData(cfg.model, tuple(eps), tuple(rho), res, S.jacobian_cond, S.steps)


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(doc: dict) -> str:
    return json.dumps({"schema": SCHEMA, **doc}, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                    for v in row])
    return buf.getvalue()


def parse_lambda_grid(spec: str) -> list:
    """``a:b:step`` (inclusive of ``b`` when hit exactly) or a single value.

    Decimal arithmetic keeps grid points such as ``0.3`` exact in their
    shortest decimal form.
    """
    try:
        parts = [Decimal(p) for p in spec.split(":")]
    except InvalidOperation as exc:
        raise InvalidInput(f"malformed lambda grid {spec!r}") from exc
    if len(parts) == 1:
        grid = [parts[0]]
    elif len(parts) == 3:
        a, b, step = parts
        if step <= 0 or b < a:
            raise InvalidInput("lambda grid needs step > 0 and a <= b")
        n = int((b - a) / step)
        if n > 100000:
            raise InvalidInput("lambda grid has too many points")
        grid = [a + i * step for i in range(n + 1)]
    else:
        raise InvalidInput(f"lambda grid must be 'a:b:step' or a single value, got {spec!r}")
    if any(x < 0 for x in grid):
        raise InvalidInput("lambda grid values must be >= 0")
    return [float(x) for x in grid]


def read_points(path: str, mode: str) -> list:
    """Rows ``z_re,z_im,w_re,w_im`` (``w`` optional in diag mode); a
    non-numeric first row is taken as a header."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InvalidInput(f"cannot read points file {path}: {exc.strerror}") from exc
    points = []
    for i, row in enumerate(rows):
        try:
            vals = [float(c) for c in row]
        except ValueError:
            if i == 0:
                continue
            raise InvalidInput(f"points file line {i + 1}: non-numeric entry") from None
        need = 2 if mode == "diag" else 4
        if len(vals) < need:
            raise InvalidInput(f"points file line {i + 1}: expected {need} columns")
        z = complex(vals[0], vals[1])
        w = complex(vals[2], vals[3]) if len(vals) >= 4 else z
        points.append((z, w))
    if not points:
        raise InvalidInput("points file contains no points")
    return points


def _threads(n_tasks: int) -> int:
    env = os.environ.get("QKM_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise InvalidInput(f"QKM_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise InvalidInput("QKM_THREADS must be >= 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


# ------------------------------------------------------------ commands


def cmd_solve(cfg: RunConfig, fmt: str) -> tuple:
    S = _solve(cfg)
    alpha = _alpha(S)
    if fmt == "csv":
        rows = [[k, cfg.model.E[k], cfg.model.r[k], S.eps[k], S.rho[k], alpha[k], S.residual_max]
                for k in range(S.d)]
        return _csv(["k", "E", "r", "eps", "rho", "alpha", "residual_max"], rows), EXIT_OK
    doc = {
        "command": "solve",
        "input": _input_doc(cfg.model),
        "eps": list(S.eps),
        "rho": list(S.rho),
        "residual_max": S.residual_max,
        "alpha": alpha,
    }
    return _json(doc), EXIT_OK


def _correlate(S, mode, formula, z, w):
    if mode == "pair":
        return G0_pair(S, z, w, formula)
    if mode == "diag":
        return G0_diag(S, z)
    return G0_oneone(S, z, w, formula)


def cmd_correlator(cfg: RunConfig, points: list, mode: str, formula: str, fmt: str) -> tuple:
    if mode not in MODES:
        raise InvalidInput(f"mode must be one of {MODES}")
    S = _solve(cfg)
    rows = []
    ok = 0
    for i, (z, w) in enumerate(points):
        try:
            v = _correlate(S, mode, formula, z, w)
            val = complex(v.value)
            rows.append([i, z.real, z.imag, w.real, w.imag, val.real, val.imag,
                         float(v.cross_check_spread), v.formula, "ok"])
            ok += 1
        except SingularPoint as exc:
            rows.append([i, z.real, z.imag, w.real, w.imag, None, None, None, formula, f"SINGULAR: {exc}"])
        except QKMError as exc:
            if isinstance(exc, InvalidInput):
                raise
            rows.append([i, z.real, z.imag, w.real, w.imag, None, None, None, formula, f"FAILED: {exc}"])
    code = EXIT_OK if ok else EXIT_INVALID
    header = ["index", "z_re", "z_im", "w_re", "w_im", "value_re", "value_im", "spread", "formula", "status"]
    if fmt == "csv":
        return _csv(header, rows), code
    doc = {"command": "correlator", "mode": mode, "input": _input_doc(cfg.model),
           "rows": [dict(zip(header, r)) for r in rows]}
    return _json(doc), code


def cmd_verify(cfg: RunConfig, fmt: str) -> tuple:
    from .verify import verify_all

    S = _solve(cfg)
    order = min(cfg.series_order, 8)
    reports = verify_all(S, samples=cfg.verify_samples, seed=cfg.verify_seed, series_order=order)
    failed = [r for r in reports if not r.max_residual < cfg.verify_threshold]
    for r in failed:
        print(f"verification failed: {r.name} residual {r.max_residual!r} at {json.dumps(r.worst_point)}",
              file=sys.stderr)
    code = EXIT_VERIFY if failed else EXIT_OK
    if fmt == "csv":
        rows = [[r.name, r.max_residual, r.sample_count, "FAIL" if r in failed else "PASS",
                 json.dumps(r.worst_point)] for r in reports]
        return _csv(["name", "max_residual", "sample_count", "status", "worst_point"], rows), code
    doc = {"command": "verify", "input": _input_doc(cfg.model), "threshold": cfg.verify_threshold,
           "passed": not failed, "reports": [r.as_dict() for r in reports]}
    return _json(doc), code


def cmd_series(cfg: RunConfig, fmt: str) -> tuple:
    from .verify import closed_form_2pt_jets, jet_deviation, series_2pt_iterative

    K = cfg.series_order
    eps, rho = series_spectral(cfg.model, K)
    closed = closed_form_2pt_jets(cfg.model, K)
    oracle = series_2pt_iterative(cfg.model, K)
    dev = jet_deviation(closed, oracle)
    d = cfg.model.d
    if fmt == "csv":
        rows = []
        for k in range(d):
            rows += [["eps", k, "", m, c] for m, c in enumerate(eps[k].coeffs.tolist())]
            rows += [["rho", k, "", m, c] for m, c in enumerate(rho[k].coeffs.tolist())]
        for k in range(d):
            for l in range(d):
                rows += [["G_closed", k, l, m, c] for m, c in enumerate(closed[k][l].coeffs.tolist())]
                rows += [["G_oracle", k, l, m, c] for m, c in enumerate(oracle[k][l].coeffs.tolist())]
        return _csv(["series", "k", "l", "order", "coefficient"], rows), EXIT_OK
    doc = {
        "command": "series",
        "input": _input_doc(cfg.model),
        "order": K,
        "eps": [j.coeffs.tolist() for j in eps],
        "rho": [j.coeffs.tolist() for j in rho],
        "G_closed": [[j.coeffs.tolist() for j in row] for row in closed],
        "G_oracle": [[j.coeffs.tolist() for j in row] for row in oracle],
        "deviation": dev.as_dict(),
    }
    return _json(doc), EXIT_OK


def _sweep_row(cfg: RunConfig, lam: float):
    m = cfg.model.with_lambda(lam)
    try:
        S = solve_spectral(m, cfg.solver)
        alpha = _alpha(S)
        G = G_matrix(S)
    except InvalidInput:
        raise
    except QKMError as exc:
        return None, f"FAILED: {type(exc).__name__}"
    iu = np.triu_indices(S.d)
    return list(S.eps) + list(S.rho) + alpha + G[iu].tolist() + [S.residual_max], "ok"


def sweep_rows(cfg: RunConfig, grid: list, solve_row=None) -> list:
    """``(lambda, values or None, status)`` for each grid point, in grid order."""
    solve_row = solve_row or _sweep_row
    with ThreadPoolExecutor(max_workers=_threads(len(grid))) as pool:
        results = list(pool.map(lambda lam: solve_row(cfg, lam), grid))
    return [(lam, vals, status) for lam, (vals, status) in zip(grid, results)]


def sweep_header(d: int) -> list:
    k = range(1, d + 1)
    G = [f"G_{a + 1}_{b + 1}" for a, b in zip(*np.triu_indices(d))]
    return (["lambda"] + [f"eps_{i}" for i in k] + [f"rho_{i}" for i in k]
            + [f"alpha_{i}" for i in k] + G + ["residual_max", "status"])


def cmd_sweep(cfg: RunConfig, grid: list, fmt: str, solve_row=None) -> tuple:
    d = cfg.model.d
    header = sweep_header(d)
    width = len(header) - 2
    rows = []
    ok = 0
    for lam, vals, status in sweep_rows(cfg, grid, solve_row):
        if vals is None:
            rows.append([lam] + [None] * width + [status])
        else:
            ok += 1
            rows.append([lam] + vals + [status])
    code = EXIT_OK if ok else EXIT_CONVERGENCE
    if fmt == "csv":
        return _csv(header, rows), code
    doc = {"command": "sweep", "input": _input_doc(cfg.model),
           "rows": [dict(zip(header, r)) for r in rows]}
    return _json(doc), code


def cmd_selftest() -> tuple:
    """A small fixed battery; prints one line per check."""
    from .cauchy import CauchyNodes, cauchy_inverse
    from .combinatorics import check_moment_cumulant, even_partitions
    from .verify import verify_all

    lines = []
    ok = True

    def check(name, passed, detail):
        nonlocal ok
        ok &= bool(passed)
        lines.append(f"{'PASS' if passed else 'FAIL'} {name} {detail}")

    S = solve_spectral(ModelInput((1.0, 2.0), (1.0, 1.0), 2.0, 0.05))
    check("solve", S.residual_max < 1e-12, repr(S.residual_max))
    inv = cauchy_inverse(CauchyNodes((3, 4), (1, 2))).entries
    check("cauchy_example", np.max(np.abs(inv - np.array([[-6, 12], [4, -6]]))) < 1e-14, inv.real.tolist())
    check("even_partitions_4", len(even_partitions(4)) == 4, "4")
    for r in verify_all(S, samples=5, seed=0, series_order=4):
        check(r.name, r.max_residual < 1e-8, repr(r.max_residual))
    mc = check_moment_cumulant((1.0, 2.0), 2.0, 4)
    check("moment_cumulant_4", mc.max_residual == 0, repr(mc.max_residual))
    return "\n".join(lines) + "\n", EXIT_OK if ok else EXIT_VERIFY


# ------------------------------------------------------------ entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qkm", description="Spectral curve and planar cumulants of the quartic Kontsevich model.")
    p.add_argument("--version", action="version", version=f"qkm {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", required=True, help="TOML run configuration")
        sp.add_argument("--out", help="output file (default: stdout, or output.path)")
        sp.add_argument("--format", choices=FORMATS, help="output format (default: output.format)")

    common(sub.add_parser("solve", help="solve for eps, rho and alpha"))
    sp = sub.add_parser("correlator", help="evaluate correlators at a list of points")
    common(sp)
    sp.add_argument("--points", required=True, help="CSV of z_re,z_im,w_re,w_im")
    sp.add_argument("--mode", choices=MODES, help="pair, diag or oneone (default: correlator.mode)")
    sp.add_argument("--formula", help="formula tag or 'all' (default: correlator.formula)")
    common(sub.add_parser("verify", help="residual checks of every identity"))
    common(sub.add_parser("series", help="lambda-series of the spectral data and of G_kl"))
    sp = sub.add_parser("sweep", help="solve over a lambda grid")
    common(sp)
    sp.add_argument("--lambda-grid", required=True, help="a:b:step or a single value")
    sub.add_parser("selftest", help="run a fixed battery of checks")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            text, code = cmd_selftest()
            sys.stdout.write(text)
            return code
        cfg = load_config(args.config)
        fmt = args.format or cfg.output_format
        if args.command == "solve":
            text, code = cmd_solve(cfg, fmt)
        elif args.command == "correlator":
            mode = args.mode or cfg.correlator_mode
            formula = args.formula or cfg.correlator_formula
            if mode == "pair" and formula not in ("all", "zhatw", "symm", "final", "new"):
                raise InvalidInput(f"unknown two-point formula {formula!r}")
            if mode == "oneone" and formula not in ("all", "sw31", "symm"):
                raise InvalidInput(f"unknown 1+1-point formula {formula!r}")
            text, code = cmd_correlator(cfg, read_points(args.points, mode), mode, formula, fmt)
        elif args.command == "verify":
            text, code = cmd_verify(cfg, fmt)
        elif args.command == "series":
            text, code = cmd_series(cfg, fmt)
        else:
            grid = parse_lambda_grid(args.lambda_grid)
            text, code = cmd_sweep(cfg, grid, args.format or "csv")
        _emit(text, args.out or cfg.output_path)
        return code
    except InvalidInput as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except QKMError as exc:
        print(f"convergence failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
