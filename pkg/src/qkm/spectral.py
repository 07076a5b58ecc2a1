"""Spectral data ``(eps_k, rho_k)`` from the model data ``(E_k, r_k, N, lambda)``.

The unknowns solve the 2d equations

    f_l = eps_l - E_l - c * sum_k rho_k / (eps_k + eps_l)        = 0
    g_l = 1 - r_l / rho_l + c * sum_k rho_k / (eps_k + eps_l)**2 = 0

with ``c = lambda / N``, which say ``R(eps_l) = E_l`` and
``rho_l R'(eps_l) = r_l``.  At ``lambda = 0`` the solution is ``(E, r)``
and the Jacobian there is ``diag(1, ..., 1, 1/r_1, ..., 1/r_d)``, so the
positive branch continues uniquely to small ``lambda``.  We follow it by
Newton's method with an adaptive homotopy in ``lambda``.

Only the real branch with all ``eps_k, rho_k > 0`` is tracked.  The full
complex solution set has at most ``(d+1)**d * (2d+1)**d`` isolated points
(affine Bezout bound); nothing here enumerates them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .curve import RationalR
from .errors import ChamberExit, DomainViolation, Divergence, InvalidInput
from .jets import SeriesJet

DOMAIN_TOL = 1e-13


@dataclass(frozen=True)
class ModelInput:
    """Distinct eigenvalues ``E``, their multiplicities ``r`` (not
    necessarily integer), the size ``N`` (default ``sum(r)``) and the
    coupling ``lam``."""

    E: tuple
    r: tuple
    N: float | None = None
    lam: float = 0.0

    def __post_init__(self):
        E = tuple(float(x) for x in np.ravel(self.E))
        r = tuple(float(x) for x in np.ravel(self.r))
        if not E:
            raise InvalidInput("E must be non-empty")
        if len(E) != len(r):
            raise InvalidInput(f"E and r must have equal length (got {len(E)} and {len(r)})")
        if not all(np.isfinite(E)) or min(E) <= 0:
            raise InvalidInput("E must be finite and strictly positive")
        if not all(np.isfinite(r)) or min(r) <= 0:
            raise InvalidInput("r must be finite and strictly positive")
        s = sorted(E)
        for a, b in zip(s, s[1:]):
            if b - a <= 1e-12 * b:
                raise InvalidInput(f"E must be pairwise distinct (relative gap > 1e-12); {a!r} and {b!r} collide")
        N = sum(r) if self.N is None else float(self.N)
        if not (np.isfinite(N) and N > 0):
            raise InvalidInput("N must be > 0")
        lam = float(self.lam)
        if not (np.isfinite(lam) and lam >= 0):
            raise InvalidInput("lambda must be finite and >= 0")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "lam", lam)

    @property
    def d(self) -> int:
        return len(self.E)

    @property
    def scale(self) -> float:
        return max(1.0, max(self.E))

    @property
    def coupling(self) -> float:
        return self.lam / self.N

    def with_lambda(self, lam: float) -> "ModelInput":
        return ModelInput(self.E, self.r, self.N, lam)


@dataclass
class SolverOptions:
    tol: float = 1e-12
    max_newton: int = 50
    min_homotopy_step: float = 1e-6


@dataclass(frozen=True)
class SpectralData:
    input: ModelInput
    eps: tuple
    rho: tuple
    residual_max: float
    jacobian_cond: float = 1.0
    steps: int = field(default=0, compare=False)

    @property
    def d(self) -> int:
        return len(self.eps)

    @property
    def scale(self) -> float:
        return self.input.scale

    @cached_property
    def curve(self) -> RationalR:
        return RationalR(self.eps, self.rho, self.input.coupling, scale=self.scale)


def _check_domain(input: ModelInput, eps, rho):
    S = eps[:, None] + eps[None, :]
    tiny = DOMAIN_TOL * input.scale
    if np.any(np.abs(S) < tiny) or np.any(np.abs(rho) < tiny):
        raise DomainViolation("eps_k + eps_l or rho_l vanishes; point outside the domain of the system")
    return S


def _residuals_c(input: ModelInput, eps, rho, c):
    eps = np.asarray(eps, float)
    rho = np.asarray(rho, float)
    S = _check_domain(input, eps, rho)
    E = np.array(input.E)
    r = np.array(input.r)
    f = eps - E - c * np.sum(rho[None, :] / S, axis=1)
    g = 1.0 - r / rho + c * np.sum(rho[None, :] / S**2, axis=1)
    return f, g


def residuals(input: ModelInput, eps, rho):
    """Componentwise ``(f, g)`` of the spectral system."""
    return _residuals_c(input, eps, rho, input.coupling)


def _jacobian_c(input: ModelInput, eps, rho, c):
    eps = np.asarray(eps, float)
    rho = np.asarray(rho, float)
    S = _check_domain(input, eps, rho)
    r = np.array(input.r)
    d = eps.size
    I = np.eye(d)
    P2 = rho[None, :] / S**2          # rho_k / (eps_k + eps_l)**2, row l
    P3 = rho[None, :] / S**3
    df_de = I + c * (P2 + I * P2.sum(axis=1)[:, None])
    df_dr = -c / S
    dg_de = c * (-2.0 * P3 - 2.0 * I * P3.sum(axis=1)[:, None])
    dg_dr = np.diag(r / rho**2) + c / S**2
    return np.block([[df_de, df_dr], [dg_de, dg_dr]])


def jacobian(input: ModelInput, eps, rho) -> np.ndarray:
    """Analytic Jacobian; rows ``(f, g)``, columns ``(eps, rho)``."""
    return _jacobian_c(input, eps, rho, input.coupling)


def _dF_dlam(input: ModelInput, eps, rho):
    S = eps[:, None] + eps[None, :]
    return np.concatenate([
        -np.sum(rho[None, :] / S, axis=1) / input.N,
        np.sum(rho[None, :] / S**2, axis=1) / input.N,
    ])


def _newton(input, x, c, opts, target):
    d = input.d
    for it in range(opts.max_newton + 1):
        try:
            F = np.concatenate(_residuals_c(input, x[:d], x[d:], c))
        except DomainViolation:
            return None, it
        res = np.max(np.abs(F))
        if not np.isfinite(res):
            return None, it
        if res <= target:
            return x, it
        if it == opts.max_newton:
            return None, it
        J = _jacobian_c(input, x[:d], x[d:], c)
        try:
            x = x - np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            return None, it
    return None, opts.max_newton


def solve_spectral(input: ModelInput, opts: SolverOptions | None = None) -> SpectralData:
    """Follow the positive branch from ``(E, r)`` at ``lambda = 0`` to ``input.lam``.

    Steps in ``lambda`` start at ``lam/8``, double after a converged Newton
    solve and halve after a failed one; a tangent predictor supplies the
    Newton start.  Raises :class:`Divergence` when the step falls below
    ``opts.min_homotopy_step * lam`` and :class:`ChamberExit` when a
    converged point leaves the positive chamber.
    """
    opts = opts or SolverOptions()
    d = input.d
    E = np.array(input.E)
    r = np.array(input.r)
    if input.lam == 0.0:
        return SpectralData(input, input.E, input.r, 0.0, float(np.max(r) / np.min(r)) if d else 1.0, 0)
    target = opts.tol * input.scale
    lam_final = input.lam
    x = np.concatenate([E, r])
    lam = 0.0
    step = lam_final / 8.0
    min_step = opts.min_homotopy_step * lam_final
    n_steps = 0
    while lam < lam_final:
        step = min(step, lam_final - lam)
        J = _jacobian_c(input, x[:d], x[d:], lam / input.N)
        tangent = -np.linalg.solve(J, _dF_dlam(input, x[:d], x[d:]))
        trial = lam + step if lam + step < lam_final else lam_final
        xn, _ = _newton(input, x + (trial - lam) * tangent, trial / input.N, opts, target)
        n_steps += 1
        if xn is None:
            step /= 2.0
            if step < min_step:
                raise Divergence(f"homotopy step fell below {opts.min_homotopy_step:g}*lambda at lambda={lam!r}")
            continue
        if np.any(xn <= 0):
            raise ChamberExit(f"spectral branch left the positive chamber between lambda={lam!r} and {trial!r}")
        x, lam = xn, trial
        step *= 2.0
    f, g = residuals(input, x[:d], x[d:])
    res = float(max(np.max(np.abs(f)), np.max(np.abs(g))))
    cond = float(np.linalg.cond(jacobian(input, x[:d], x[d:])))
    return SpectralData(input, tuple(x[:d].tolist()), tuple(x[d:].tolist()), res, cond, n_steps)


def series_spectral(input: ModelInput, K: int):
    """Taylor jets of ``eps_k(lambda)`` and ``rho_k(lambda)`` to order ``K``.

    Order ``m`` of ``f = g = 0`` is linear in the order-``m`` unknowns with
    the ``lambda = 0`` Jacobian ``diag(1, 1/r)``; everything else is
    already known from lower orders.
    """
    if K < 0:
        raise InvalidInput("series order must be >= 0")
    d = input.d
    E = np.array(input.E)
    r = np.array(input.r)
    ec = np.zeros((d, K + 1))
    rc = np.zeros((d, K + 1))
    ec[:, 0] = E
    rc[:, 0] = r
    c = SeriesJet.variable(K, 1.0 / input.N)
    for m in range(1, K + 1):
        eps = [SeriesJet(ec[k, : m + 1]) for k in range(d)]
        rho = [SeriesJet(rc[k, : m + 1]) for k in range(d)]
        cm = c.truncate(m)
        for l in range(d):
            s1 = SeriesJet.constant(0.0, m)
            s2 = SeriesJet.constant(0.0, m)
            for k in range(d):
                inv = (eps[k] + eps[l]).reciprocal()
                s1 = s1 + rho[k] * inv
                s2 = s2 + rho[k] * inv * inv
            f = eps[l] - E[l] - cm * s1
            g = 1.0 - r[l] * rho[l].reciprocal() + cm * s2
            ec[l, m] = -f[m]
            rc[l, m] = -r[l] * g[m]
    return [SeriesJet(ec[k]) for k in range(d)], [SeriesJet(rc[k]) for k in range(d)]
