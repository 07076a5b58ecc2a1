"""Closed forms of the planar two-point and 1+1-point functions.

Everything is evaluated in the uniformising coordinate ``z`` of the cover
``R``; the cumulants themselves are ``G(zeta, eta) = calG(R^-1 zeta, R^-1 eta)``
on the principal branch.  Four equivalent expressions for ``calG(z, w)``
are available:

``zhatw``   ``1/(R(w)-R(-z)) * prod_j (R(z)-R(-w^j)) / (R(z)-R(eps_j))``
``symm``    ``1/(z+w) * prod_{k,l} (eps_k+eps_l)(-w^k-z^l) / ((eps_k-z^l)(eps_l-w^k))``
``final``   one sum over the hats of the ``eps_k``
``new``     a double sum weighted by the matrix ``calG_kl``

where ``w^j``, ``z^l`` are the hats (other preimages) of ``w`` and ``z``.
Only ``symm`` is regular at ``z = eps_k``; the other three are ``0 * inf``
there and raise :class:`SingularPoint`.

At ``lambda = 0`` every function returns its exact Gaussian value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._numeric import leave_one_out, tree_prod
from .cauchy import CauchyNodes, cauchy_inverse
from .curve import alpha_roots, eval_R, eval_R_prime, hat_fan
from .errors import InvalidInput, SingularPoint
from .spectral import SpectralData

SINGULAR_TOL = 1e-10
COINCIDENCE_DELTA = 1e-3
HATS_CACHE_SIZE = 4096

PAIR_FORMULAS = ("zhatw", "symm", "final", "new")
ONEONE_FORMULAS = ("sw31", "symm")


@dataclass(frozen=True)
class CorrelatorValue:
    value: complex
    formula: str
    cross_check_spread: float = 0.0
    values: dict = field(default_factory=dict, compare=False, repr=False)


class _Geometry:
    """Quantities that depend only on the spectral data, computed once."""

    def __init__(self, S: SpectralData):
        self.S = S
        self.R = S.curve
        self.d = S.d
        self.lam = S.input.lam
        self.N = S.input.N
        self.c = S.input.coupling
        self.scale = S.scale
        self.eps = np.array(S.eps)
        self.rho = np.array(S.rho)
        self.r = np.array(S.input.r)
        self.exact = self.c == 0.0
        self._hats_cache = {}
        if self.exact:
            return
        R = self.R
        self.RE = eval_R(R, self.eps)
        self.Rp = eval_R_prime(R, self.eps)
        self.alpha = np.array(alpha_roots(R).alpha)
        self.Ralpha = eval_R(R, self.alpha)
        self.R0 = eval_R(R, 0.0)
        # eps_hats[k, j]: the hats of eps_k (order irrelevant for every use)
        self.eps_hats = np.array([hat_fan(R, e).hats for e in self.eps])
        self.R_neg_eps_hats = eval_R(R, -self.eps_hats)
        self.RE_gaps = leave_one_out(self.RE)
        self.G = self._G_matrix()
        self._oneone_cauchy = None

    def _G_matrix(self):
        e = self.eps
        h = self.eps_hats
        d = self.d
        pair = e[:, None] + e[None, :]
        G = np.empty((d, d))
        Q = tree_prod(leave_one_out(e) / self.RE_gaps)
        for k in range(d):
            for l in range(d):
                num = -h[k][:, None] - h[l][None, :]
                G[k, l] = tree_prod((num / pair).ravel())
        G *= np.outer(Q, Q) / (np.outer(self.Rp, self.Rp) * pair)
        return G

    def guard(self, x, what):
        if abs(x) < SINGULAR_TOL * self.scale:
            raise SingularPoint(f"{what} vanishes at the evaluation point")
        return x

    def Rm(self, z):
        return eval_R(self.R, -z)

    def hats(self, z):
        z = complex(z)
        hit = self._hats_cache.get(z)
        if hit is None:
            k = self.near_eps(z)
            if k is not None and z == self.eps[k]:
                hit = self.eps_hats[k]
            else:
                hit = np.array(hat_fan(self.R, z, ordered=False).hats)
            if len(self._hats_cache) >= HATS_CACHE_SIZE:
                self._hats_cache.clear()
            self._hats_cache[z] = hit
        return hit

    def near_eps(self, z):
        i = int(np.argmin(np.abs(self.eps - z)))
        return i if abs(self.eps[i] - z) < SINGULAR_TOL * self.scale else None


@lru_cache(maxsize=128)
def geometry(S: SpectralData) -> _Geometry:
    return _Geometry(S)


# ---------------------------------------------------------------- two-point


def _exact_pair(g, z, w):
    return 1.0 / g.guard(z + w, "z + w")


def _pair_zhatw(g, z, w, w_hats=None):
    if w_hats is None:
        w_hats = g.hats(w)
    Rz = eval_R(g.R, z)
    pre = 1.0 / g.guard(eval_R(g.R, w) - g.Rm(z), "R(w) - R(-z)")
    den = np.array([g.guard(x, "R(z) - R(eps_j)") for x in Rz - g.RE])
    return pre * tree_prod((Rz - g.Rm(w_hats)) / den)


def _pair_symm(g, z, w, z_hats=None, w_hats=None):
    if z_hats is None:
        z_hats = g.hats(z)
    if w_hats is None:
        w_hats = g.hats(w)
    e = g.eps
    pair = e[:, None] + e[None, :]
    num = pair * (-w_hats[:, None] - z_hats[None, :])
    den = (e[:, None] - z_hats[None, :]) * (e[None, :] - w_hats[:, None])
    if np.min(np.abs(den)) < SINGULAR_TOL * g.scale:
        raise SingularPoint("a hat of z or w meets some eps_k")
    return tree_prod((num / den).ravel()) / g.guard(z + w, "z + w")


def _pair_final(g, z, w):
    Rz, Rw = eval_R(g.R, z), eval_R(g.R, w)
    Rmw = g.Rm(w)
    den_w = np.array([g.guard(x, "R(w) - R(eps_j)") for x in Rw - g.RE])
    prods = tree_prod((Rw - g.R_neg_eps_hats) / den_w[None, :])
    a = np.array([g.guard(x, "R(z) - R(eps_k)") for x in Rz - g.RE])
    b = np.array([g.guard(x, "R(eps_k) - R(-w)") for x in g.RE - Rmw])
    s = np.sum(g.r * prods / (a * b))
    return (1.0 - g.c * s) / g.guard(Rw - g.Rm(z), "R(w) - R(-z)")


def _pair_new(g, z, w):
    Rz, Rw = eval_R(g.R, z), eval_R(g.R, w)
    pre = g.guard(Rw - g.Rm(z), "R(w) - R(-z)") * g.guard(Rz - g.Rm(w), "R(z) - R(-w)")
    u = np.array([g.guard(x, "R(eps_k) - R(z)") for x in g.RE - Rz])
    v = np.array([g.guard(x, "R(eps_l) - R(w)") for x in g.RE - Rw])
    brace = (Rz + Rw + g.c * np.sum(g.r / u + g.r / v)
             + g.c**2 * (g.r / u) @ g.G @ (g.r / v))
    return brace / pre


_PAIR = {"zhatw": _pair_zhatw, "symm": _pair_symm, "final": _pair_final, "new": _pair_new}


def _spread(values) -> float:
    vals = list(values)
    worst = 0.0
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            scale = max(abs(vals[i]), abs(vals[j]))
            if scale > 0:
                worst = max(worst, abs(vals[i] - vals[j]) / scale)
    return worst


def G0_pair(S: SpectralData, z, w, formula: str = "symm") -> CorrelatorValue:
    """Planar two-point function ``calG(z, w)``.

    ``formula='all'`` evaluates every form that is regular at ``(z, w)`` and
    reports their maximal pairwise relative deviation; the returned value is
    the ``symm`` one whenever that form applies.
    """
    g = geometry(S)
    z, w = complex(z), complex(w)
    if g.exact:
        return CorrelatorValue(_exact_pair(g, z, w), "exact")
    if formula == "all":
        values = {}
        errors = []
        z_hats, w_hats = g.hats(z), g.hats(w)
        for name in PAIR_FORMULAS:
            try:
                if name == "symm":
                    values[name] = _pair_symm(g, z, w, z_hats, w_hats)
                elif name == "zhatw":
                    values[name] = _pair_zhatw(g, z, w, w_hats)
                else:
                    values[name] = _PAIR[name](g, z, w)
            except SingularPoint as exc:
                errors.append(exc)
        if not values:
            raise errors[0]
        main = values.get("symm", next(iter(values.values())))
        return CorrelatorValue(main, "all", _spread(values.values()), values)
    if formula not in _PAIR:
        raise InvalidInput(f"unknown two-point formula {formula!r}")
    return CorrelatorValue(_PAIR[formula](g, z, w), formula)


def G_matrix(S: SpectralData) -> np.ndarray:
    """The matrix ``calG_kl = calG(eps_k, eps_l)`` from the closed product formula."""
    g = geometry(S)
    if g.exact:
        E = np.array(S.input.E)
        return 1.0 / (E[:, None] + E[None, :])
    return g.G.copy()


def G_eps_row(S: SpectralData, w) -> np.ndarray:
    """``calG(eps_k, w)`` for all k from the Cauchy row-sum form
    ``c r_k calG(eps_k, w) = -prod_j (R(eps_k) - R(-w^j)) / prod_{j!=k} (R(eps_k) - R(eps_j))``."""
    g = geometry(S)
    w = complex(w)
    if g.exact:
        return np.array([_exact_pair(g, e, w) for e in g.eps])
    Rmh = g.Rm(g.hats(w))
    num = tree_prod(g.RE[:, None] - Rmh[None, :])
    den = tree_prod(g.RE_gaps)
    return -num / den / (g.c * g.r)


def G0_diag(S: SpectralData, z) -> CorrelatorValue:
    """``calG(z, z) = 2(R(z)-R(0)) / (R(z)-R(-z))**2 * prod_k ((R(z)-R(alpha_k)) / (R(z)-R(eps_k)))**2``."""
    g = geometry(S)
    z = complex(z)
    if g.exact:
        return CorrelatorValue(1.0 / g.guard(2.0 * z, "2z"), "exact")
    Rz = eval_R(g.R, z)
    odd = g.guard(Rz - g.Rm(z), "R(z) - R(-z)")
    den = np.array([g.guard(x, "R(z) - R(eps_k)") for x in Rz - g.RE])
    ratio = tree_prod((Rz - g.Ralpha) / den)
    return CorrelatorValue(2.0 * (Rz - g.R0) / odd**2 * ratio**2, "diag")


# ---------------------------------------------------------------- 1+1-point


def _D(g, x):
    """``prod_k (R(x)-R(alpha_k)) / (R(x)-R(eps_k)) / (R(x)-R(-x))`` with its
    finite value at ``x = eps_k`` filled in."""
    k = g.near_eps(x)
    if k is not None:
        num = tree_prod(g.RE[k] - g.Ralpha)
        return -num / (g.c * g.r[k] * tree_prod(g.RE_gaps[k]))
    Rx = eval_R(g.R, x)
    den = np.array([g.guard(v, "R(x) - R(eps_k)") for v in Rx - g.RE])
    return tree_prod((Rx - g.Ralpha) / den) / g.guard(Rx - g.Rm(x), "R(x) - R(-x)")


def _oneone_symm(g, z, w):
    Rz, Rw = eval_R(g.R, z), eval_R(g.R, w)
    bracket = _pair_symm(g, z, w) - (Rz + Rw - 2.0 * g.R0) * _D(g, z) * _D(g, w)
    return g.lam * bracket / g.guard(Rz - Rw, "R(z) - R(w)") ** 2


def _eps_oneone(g, w):
    """``(r_k/N) calG(eps_k | w)`` for all k from the Cauchy system at the alpha nodes."""
    if g._oneone_cauchy is None:
        nodes = CauchyNodes(g.Ralpha, g.RE, scale=g.scale)
        g._oneone_cauchy = cauchy_inverse(nodes).entries
    Gww = _pair_symm(g, w, w)
    Rw = eval_R(g.R, w)
    y = np.array([(_pair_symm(g, a, w) - Gww) / g.guard(Ra - Rw, "R(alpha_l) - R(w)")
                  for a, Ra in zip(g.alpha, g.Ralpha)])
    return g._oneone_cauchy @ y, Gww


def _oneone_sw31(g, z, w):
    x, Gww = _eps_oneone(g, w)
    k = g.near_eps(z)
    if k is not None:
        return g.N * x[k] / g.r[k]
    Rz, Rw = eval_R(g.R, z), eval_R(g.R, w)
    den = np.array([g.guard(v, "R(z) - R(eps_k)") for v in Rz - g.RE])
    brace = (_pair_symm(g, z, w) - Gww) / g.guard(Rz - Rw, "R(z) - R(w)") - np.sum(x / den)
    return g.lam * brace / g.guard(Rz - g.Rm(z), "R(z) - R(-z)")


_ONEONE = {"sw31": _oneone_sw31, "symm": _oneone_symm}


def _coincidence(f, z, w):
    """Value of the 0/0 expression ``f(z, w)`` for ``z`` close to ``w``.

    Interpolates ``t -> f(w + t, w)`` through ``t = +-h, +-2h`` along the
    line through ``z`` and evaluates the cubic at ``t = z - w``.  At
    ``t = 0`` this is the Richardson combination
    ``(4 v(h) - v(2h)) / 3`` of the symmetric averages ``v``.
    """
    t0 = z - w
    h = COINCIDENCE_DELTA * max(1.0, abs(w))
    u = t0 / abs(t0) if t0 != 0 else (w / abs(w) if w != 0 else 1.0)
    nodes = np.array([-2.0, -1.0, 1.0, 2.0])
    vals = np.array([f(w + s * h * u, w) for s in nodes])
    s0 = abs(t0) / h
    weights = np.array([
        np.prod([(s0 - nodes[m]) / (nodes[j] - nodes[m]) for m in range(4) if m != j])
        for j in range(4)
    ])
    return complex(weights @ vals)


def G0_oneone(S: SpectralData, z, w, formula: str = "symm") -> CorrelatorValue:
    """Planar 1+1-point function ``calG(z | w)``.

    ``sw31`` solves the linear Cauchy system at the roots ``alpha_k`` and
    inserts the result; ``symm`` is the manifestly symmetric closed form.
    Both are ``0/0`` at ``z = w``; within ``COINCIDENCE_DELTA`` of the
    diagonal the value is obtained by polynomial extrapolation.
    """
    g = geometry(S)
    z, w = complex(z), complex(w)
    if g.exact:
        return CorrelatorValue(0.0j, "exact")
    names = ONEONE_FORMULAS if formula == "all" else (formula,)
    for name in names:
        if name not in _ONEONE:
            raise InvalidInput(f"unknown 1+1-point formula {formula!r}")
    close = abs(z - w) < COINCIDENCE_DELTA * max(1.0, abs(w))
    values = {}
    for name in names:
        f = _ONEONE[name]
        if close and not (g.near_eps(z) is not None and name == "sw31"):
            values[name] = _coincidence(lambda a, b, f=f: f(g, a, b), z, w)
        else:
            values[name] = complex(f(g, z, w))
    if formula == "all":
        return CorrelatorValue(values["symm"], "all", _spread(values.values()), values)
    return CorrelatorValue(values[formula], formula)


def G0_oneone_eps(S: SpectralData, w) -> np.ndarray:
    """``calG(eps_k | w)`` for all k, via the Cauchy solve of the alpha system."""
    g = geometry(S)
    if g.exact:
        return np.zeros(S.d, dtype=complex)
    x, _ = _eps_oneone(g, complex(w))
    return g.N * x / g.r
