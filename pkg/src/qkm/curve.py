"""The rational cover ``R(z) = z - c * sum_k rho_k / (eps_k + z)``.

``c`` is the coupling ``lambda / N``.  For ``c > 0`` the cover has degree
``d + 1``: every value has ``d + 1`` preimages (a *fan*), of which one is the
point we started from and the other ``d`` are its *hats*.

For real positive data ``R`` is strictly increasing on each of the ``d + 1``
components of the real line minus the poles ``-eps_k``, so a real value has
exactly one real preimage per component.  We use that both to label hats and
as a fallback when eigenvalue rooting loses a real root to a complex pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from ._numeric import tree_prod
from .errors import (
    BaseNotFound,
    BranchAmbiguity,
    DegenerateFiber,
    InvalidInput,
    PoleHit,
    RootCountMismatch,
    ZeroCoupling,
)

POLE_TOL = 1e-13
FIBER_TOL = 1e-8
RAMIFICATION_TOL = 1e-6
BASE_TOL = 1e-8
BRANCH_STEPS = 16
BRANCH_AMBIGUITY = 1e-6


@dataclass(frozen=True)
class RationalR:
    eps: tuple
    rho: tuple
    coupling: float
    scale: float | None = None

    def __post_init__(self):
        eps = tuple(float(e) for e in self.eps)
        rho = tuple(float(p) for p in self.rho)
        if not eps or len(eps) != len(rho):
            raise InvalidInput("eps and rho must be non-empty lists of equal length")
        if min(eps) <= 0:
            raise InvalidInput("eps must be strictly positive")
        if min(rho) <= 0:
            raise InvalidInput("rho must be strictly positive")
        if not self.coupling >= 0:
            raise InvalidInput("coupling must be >= 0")
        s = sorted(eps)
        if any(b - a <= 1e-12 * max(abs(a), abs(b)) for a, b in zip(s, s[1:])):
            raise InvalidInput("eps must be pairwise distinct")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "coupling", float(self.coupling))
        if self.scale is None:
            object.__setattr__(self, "scale", max(1.0, max(eps)))

    @property
    def d(self) -> int:
        return len(self.eps)

    @cached_property
    def eps_array(self) -> np.ndarray:
        return np.array(self.eps)

    @cached_property
    def rho_array(self) -> np.ndarray:
        return np.array(self.rho)

    @cached_property
    def poles(self) -> np.ndarray:
        """Finite poles ``-eps_k`` in ascending order."""
        return np.sort(-self.eps_array)

    @cached_property
    def _cleared_parts(self):
        """``z prod_k (z + eps_k) - c sum_k rho_k prod_{j!=k} (z + eps_j)`` and
        ``prod_k (z + eps_k)``, the ``v``-independent pieces of the fibre polynomial."""
        neg = -self.eps_array
        pi = np.poly(neg)
        base = np.concatenate([pi, [0.0]])
        for k in range(self.d):
            base[-self.d:] -= self.coupling * self.rho[k] * np.poly(np.delete(neg, k))
        return base, pi

    def __call__(self, z):
        return eval_R(self, z)

    def prime(self, z):
        return eval_R_prime(self, z)


@dataclass(frozen=True)
class PreimageFan:
    base: complex
    hats: tuple
    value: complex

    @property
    def points(self) -> np.ndarray:
        return np.array((self.base,) + tuple(self.hats))


@dataclass(frozen=True)
class AlphaRoots:
    alpha: tuple

    @property
    def squared(self) -> np.ndarray:
        return np.array(self.alpha) ** 2


def _pole_denominators(R: RationalR, z):
    den = np.asarray(z)[..., None] + R.eps_array
    if np.any(np.abs(den) < POLE_TOL * R.scale):
        raise PoleHit(f"evaluation point within {POLE_TOL:g}*scale of a pole -eps_k")
    return den


def eval_R(R: RationalR, z):
    """``R(z)``; scalar in, scalar out, arrays broadcast."""
    if R.coupling == 0.0:
        return np.asarray(z)[()]
    den = _pole_denominators(R, z)
    return (np.asarray(z) - R.coupling * np.sum(R.rho_array / den, axis=-1))[()]


def eval_R_prime(R: RationalR, z):
    if R.coupling == 0.0:
        return np.ones_like(np.asarray(z, dtype=np.result_type(z, float)))[()]
    den = _pole_denominators(R, z)
    return (1.0 + R.coupling * np.sum(R.rho_array / den**2, axis=-1))[()]


def _is_real(v) -> bool:
    return np.isrealobj(v) or np.imag(v) == 0


def _cleared_polynomial(R: RationalR, v) -> np.ndarray:
    """Monic coefficients (highest first) of ``(R(z) - v) * prod_k (z + eps_k)``."""
    base, pi = R._cleared_parts
    p = base.astype(np.result_type(base, v))
    p[1:] -= v * pi
    return p


def _newton_polish(R: RationalR, roots, v, steps):
    z = np.array(roots)
    for _ in range(steps):
        step = (eval_R(R, z) - v) / eval_R_prime(R, z)
        z = z - step
    return z


def _min_gap(points) -> float:
    gaps = np.abs(points[:, None] - points[None, :])
    np.fill_diagonal(gaps, np.inf)
    return float(gaps.min())


def _interval_index(R: RationalR, x) -> np.ndarray:
    return np.searchsorted(R.poles, x)


def _bracketed_real_roots(R: RationalR, v: float) -> np.ndarray:
    """One root per component of the real line minus the poles, by bisection.

    On each component ``(lo, hi)`` we root the continuous function
    ``(z - lo)(hi - z)(R(z) - v)`` whose boundary values are ``-c*rho`` and
    ``+c*rho`` of the adjacent poles.
    """
    c = R.coupling
    order = np.argsort(-R.eps_array)          # poles ascending
    poles = -R.eps_array[order]
    rho = R.rho_array[order]
    eps_sorted = R.eps_array[order]
    d = R.d
    xtol = 1e-15 * R.scale
    roots = []

    def rest(z, skip):
        mask = np.ones(d, bool)
        mask[list(skip)] = False
        return z - v - c * np.sum(rho[mask] / (eps_sorted[mask] + z))

    for i in range(d + 1):
        if i == 0:
            p = poles[0]

            def q(z, p=p):
                return (p - z) * rest(z, [0]) + c * rho[0]

            lo = min(v, p) - 1.0
            while q(lo) > 0:
                lo = p - 2.0 * (p - lo)
            roots.append(brentq(q, lo, p, xtol=xtol, rtol=8.9e-16))
        elif i == d:
            p = poles[-1]

            def q(z, p=p):
                return (z - p) * rest(z, [d - 1]) - c * rho[d - 1]

            hi = max(v, p) + 1.0
            while q(hi) < 0:
                hi = p + 2.0 * (hi - p)
            roots.append(brentq(q, p, hi, xtol=xtol, rtol=8.9e-16))
        else:
            lo, hi = poles[i - 1], poles[i]

            def q(z, lo=lo, hi=hi, i=i):
                return ((z - lo) * (hi - z) * rest(z, [i - 1, i])
                        - c * rho[i - 1] * (hi - z) + c * rho[i] * (z - lo))

            roots.append(brentq(q, lo, hi, xtol=xtol, rtol=8.9e-16))
    return np.array(roots)


def preimages(R: RationalR, v, polish: int = 2) -> np.ndarray:
    """All ``d + 1`` roots of ``R(z) = v``.

    Companion-matrix eigenvalues of the cleared-denominator polynomial,
    then Newton steps on ``R(z) - v``.  For real ``v`` the roots are real and
    are returned in descending order (principal branch first); complex
    fibres are ordered by descending real part.
    """
    if R.coupling == 0.0:
        raise ZeroCoupling("R is the identity at zero coupling; the only preimage is v itself")
    real = _is_real(v)
    if real:
        v = float(np.real(v))
    roots = np.roots(_cleared_polynomial(R, v))
    if real:
        roots = _newton_polish(R, roots.real, v, polish)
        idx = _interval_index(R, roots)
        if sorted(idx.tolist()) != list(range(R.d + 1)):
            roots = _bracketed_real_roots(R, v)
        roots = np.sort(roots)[::-1]
    else:
        roots = _newton_polish(R, roots.astype(complex), v, polish)
        roots = roots[np.lexsort((roots.imag, -roots.real))]
    # a double root splits into two roots about sqrt(machine eps) apart, so
    # the gap test alone misses exact branch values; R' vanishes there too
    if _min_gap(roots) < FIBER_TOL * R.scale or np.min(np.abs(eval_R_prime(R, roots))) < RAMIFICATION_TOL:
        raise DegenerateFiber("two preimages coincide: the value is a branch value of R")
    return roots


def _label_real_hats(R: RationalR, hats) -> np.ndarray:
    """hats[k] is the hat in the component immediately left of ``-eps[k]``."""
    out = np.empty(R.d, dtype=np.asarray(hats).dtype)
    out[np.argsort(R.eps_array)] = np.sort(hats)[::-1]
    return out


def _split_fan(R: RationalR, roots, u):
    i = int(np.argmin(np.abs(roots - u)))
    if abs(roots[i] - u) > BASE_TOL * R.scale * max(1.0, abs(u)):
        raise BaseNotFound(f"no preimage of R(u) matches u={u!r}")
    return np.delete(roots, i)


def hat_fan(R: RationalR, u, ordered: bool = True) -> PreimageFan:
    """The fan over ``R(u)``: ``u`` itself plus its ``d`` hats.

    With ``ordered=False`` the hats of a complex ``u`` come back in an
    arbitrary (real-part descending) order, which is all the symmetric
    correlator formulas need and avoids the continuation cost.
    """
    if R.coupling == 0.0:
        return PreimageFan(base=u, hats=tuple(-R.eps_array), value=u)
    v = eval_R(R, u)
    hats = _split_fan(R, preimages(R, v), u)
    if _is_real(u):
        hats = _label_real_hats(R, hats.real)
    elif ordered:
        hats = _continue_hats(R, complex(u))
    return PreimageFan(base=u, hats=tuple(hats.tolist()), value=v)


def _continue_hats(R: RationalR, u: complex) -> np.ndarray:
    """Carry the real labelling at ``Re(u)`` up to ``u`` by nearest-neighbour tracking."""
    anchor = u.real
    try:
        start = hat_fan(R, anchor)
    except (PoleHit, DegenerateFiber) as exc:
        raise BranchAmbiguity(f"real anchor {anchor!r} is not a regular point") from exc
    tracked = np.array((anchor,) + start.hats, dtype=complex)
    for t in range(1, BRANCH_STEPS + 1):
        ut = complex(anchor, u.imag * t / BRANCH_STEPS)
        roots = preimages(R, eval_R(R, ut))
        if _min_gap(roots) < BRANCH_AMBIGUITY * R.scale:
            raise BranchAmbiguity("two branches approach each other along the continuation path")
        dist = np.abs(tracked[:, None] - roots[None, :])
        match = np.argmin(dist, axis=1)
        if len(set(match.tolist())) != roots.size:
            raise BranchAmbiguity("nearest-neighbour continuation is not one-to-one")
        tracked = roots[match]
    if abs(tracked[0] - u) > BASE_TOL * R.scale * max(1.0, abs(u)):
        raise BranchAmbiguity("the base point was lost during continuation")
    return tracked[1:]


def alpha_roots(R: RationalR) -> AlphaRoots:
    """Positive roots of ``R(z) - R(-z)``.

    ``R(z) - R(-z) = 2z (1 - c * sum_k rho_k / (z^2 - eps_k^2))``; the bracket
    in ``s = z^2`` has one root between consecutive ``eps_k^2`` and one above
    the largest.  At zero coupling the roots degenerate onto ``eps``.
    """
    eps2 = np.sort(R.eps_array**2)
    if R.coupling == 0.0:
        return AlphaRoots(tuple(np.sqrt(eps2).tolist()))
    order = np.argsort(R.eps_array**2)
    rho = R.rho_array[order]
    c = R.coupling
    d = R.d
    roots = []

    def rest(s, skip):
        mask = np.ones(d, bool)
        mask[list(skip)] = False
        return 1.0 - c * np.sum(rho[mask] / (s - eps2[mask]))

    for k in range(d):
        a = eps2[k]
        if k < d - 1:
            b = eps2[k + 1]

            def q(s, a=a, b=b, k=k):
                return ((s - a) * (b - s) * rest(s, [k, k + 1])
                        - c * rho[k] * (b - s) + c * rho[k + 1] * (s - a))
        else:
            b = a + 2.0 * c * rho.sum() + 1.0

            def q(s, a=a, k=k):
                return (s - a) * rest(s, [k]) - c * rho[k]
        if not q(a) < 0 < q(b):
            raise RootCountMismatch(f"secular equation lost its sign change on ({a}, {b})")
        roots.append(brentq(q, a, b, xtol=1e-16 * max(1.0, a), rtol=8.9e-16))
    return AlphaRoots(tuple(np.sqrt(roots).tolist()))


def check_factorization(R: RationalR, u, z, fan: PreimageFan | None = None) -> float:
    """Relative residual of ``R(z) - R(u) = (z - u) prod_k (z - hat_k)/(z + eps_k)``."""
    if fan is None:
        fan = hat_fan(R, u)
    lhs = eval_R(R, z) - eval_R(R, u)
    factors = (z - np.array(fan.hats)) / (z + R.eps_array)
    rhs = (z - u) * tree_prod(factors)
    return float(abs(lhs - rhs) / max(1.0, abs(lhs)))


def fan_residue(R: RationalR, fan: PreimageFan, k: int):
    """``(u + eps_k) prod_l (hat_l + eps_k) / prod_{j != k} (eps_k - eps_j)``.

    This is the residue of the factorised form at ``z = -eps_k`` and equals
    ``-c * rho_k`` for every regular ``u`` and every ``d``.
    """
    e = R.eps_array
    num = (fan.base + e[k]) * tree_prod(np.array(fan.hats) + e[k])
    den = tree_prod(e[k] - np.delete(e, k))
    return num / den
