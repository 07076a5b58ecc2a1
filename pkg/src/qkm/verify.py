"""Residual checks of the functional equations, and an independent series oracle.

Every residual is ``|lhs - rhs| / max(1, |lhs|)``.  The oracle
:func:`series_2pt_iterative` solves the two-point equation order by order in
``lambda`` directly in the eigenvalue variables and never touches the cover
``R``; :func:`compare_series` confronts it with the closed product formula
expanded through :func:`~qkm.spectral.series_spectral`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._numeric import rel_residual, tree_prod
from .cauchy import CauchyNodes, verify_schechter
from .correlators import (
    G0_oneone,
    G0_pair,
    G_eps_row,
    G_matrix,
    _pair_symm,
    geometry,
)
from .curve import check_factorization, eval_R, eval_R_prime, hat_fan
from .errors import BranchInversionFailure, QKMError
from .jets import SeriesJet, jet_product
from .spectral import ModelInput, SpectralData, series_spectral

STENCIL_H = 1e-5
COLLISION_TOL = 1e-6


@dataclass
class ResidualReport:
    name: str
    max_residual: float
    sample_count: int
    worst_point: dict = field(default_factory=dict)

    def passed(self, threshold: float) -> bool:
        return self.max_residual < threshold

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "max_residual": self.max_residual,
            "sample_count": self.sample_count,
            "worst_point": self.worst_point,
        }


def _reduce(name, samples) -> ResidualReport:
    """Max over ``(residual, point)`` pairs; ties go to the lowest index."""
    worst, where, n = -1.0, {}, 0
    for res, point in samples:
        n += 1
        if res > worst:
            worst, where = res, point
    return ResidualReport(name, float(max(worst, 0.0)), n, where)


def _c(x) -> list:
    x = complex(x)
    return [x.real, x.imag]


# ------------------------------------------------------------ sample points


def sample_z(S: SpectralData, n: int, rng: np.random.Generator) -> np.ndarray:
    """Complex points in the right half-plane, off the real axis."""
    s = S.scale
    re = rng.uniform(0.1, 1.5, n) * s
    im = rng.choice([-1.0, 1.0], n) * rng.uniform(0.1, 1.0, n) * s
    return re + 1j * im


def sample_near_nodes(S: SpectralData, n: int, rng: np.random.Generator) -> np.ndarray:
    """Values ``zeta`` in small discs around the eigenvalues ``E_a``."""
    E = np.array(S.input.E)
    gaps = np.diff(np.sort(E))
    radius = 0.25 * min(1.0, gaps.min() if gaps.size else 1.0, E.min())
    a = rng.integers(0, E.size, n)
    rad = radius * rng.uniform(0.1, 1.0, n)
    return E[a] + rad * np.exp(1j * rng.uniform(0, 2 * np.pi, n))


# ------------------------------------------------------------ inversion


def invert_principal(S: SpectralData, zeta, max_iter: int = 60) -> complex:
    """``z`` on the principal branch with ``R(z) = zeta``, by Newton's method.

    Seeded from the linearisation at the nearest ``eps_a``; the result must
    lie in the right half-plane.
    """
    R = S.curve
    zeta = complex(zeta)
    if R.coupling == 0.0:
        return zeta
    E = np.array(S.input.E)
    a = int(np.argmin(np.abs(E - zeta)))
    eps_a = S.eps[a]
    z = eps_a + (zeta - eval_R(R, eps_a)) / eval_R_prime(R, eps_a)
    tol = 1e-15 * S.scale
    for _ in range(max_iter):
        step = (eval_R(R, z) - zeta) / eval_R_prime(R, z)
        z = z - step
        if abs(step) <= tol * max(1.0, abs(z)):
            break
    else:
        raise BranchInversionFailure(f"Newton inversion of R did not converge at zeta={zeta!r}")
    if not (z.real > 0 and abs(eval_R(R, z) - zeta) <= 1e-12 * S.scale * max(1.0, abs(zeta))):
        raise BranchInversionFailure(f"inversion of R at zeta={zeta!r} left the principal branch")
    return complex(z)


def _pair(S, z, w):
    return G0_pair(S, z, w, "symm").value


def _dz_pair(S, z, w, w_hats=None):
    """``d/dz calG(z, w)`` by the 5-point central stencil."""
    g = geometry(S)
    if g.exact:
        return -1.0 / (z + w) ** 2
    h = STENCIL_H * S.scale
    if w_hats is None:
        w_hats = g.hats(w)
    f = [_pair_symm(g, z + s * h, w, None, w_hats) for s in (-2, -1, 1, 2)]
    return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)


# ------------------------------------------------------------ residuals


def residual_GZW(S: SpectralData, zeta, eta) -> float:
    """Residual of the holomorphic two-point equation at ``(zeta, eta)``.

    A term with ``zeta`` within ``1e-6 * scale`` of some ``E_k`` uses the
    ``zeta``-derivative instead of the difference quotient.
    """
    zeta, eta = complex(zeta), complex(eta)
    c = S.input.coupling
    E = np.array(S.input.E)
    r = np.array(S.input.r)
    z = invert_principal(S, zeta)
    w = invert_principal(S, eta)
    G = _pair(S, z, w)
    row = np.array([_pair(S, z, e) for e in S.eps])
    lhs = (zeta + eta + c * np.dot(r, row)) * G
    quot = 0j
    for k in range(S.d):
        if abs(E[k] - zeta) < COLLISION_TOL * S.scale:
            R = S.curve
            quot += r[k] * _dz_pair(S, z, w) / eval_R_prime(R, z)
        else:
            quot += r[k] * (_pair(S, S.eps[k], w) - G) / (E[k] - zeta)
    rhs = 1.0 + c * quot
    return rel_residual(lhs, rhs)


def residual_2pt(S: SpectralData, G: np.ndarray | None = None) -> ResidualReport:
    """Residual of the lattice two-point equation at every pair ``(a, b)``.

    ``G`` overrides the matrix ``G_ab`` (default: the closed formula); the
    ``k = a`` collision term always comes from the closed form, as
    ``c r_a (d/dz calG)(eps_a, eps_b) / R'(eps_a)``.
    """
    E = np.array(S.input.E)
    r = np.array(S.input.r)
    c = S.input.coupling
    d = S.d
    if G is None:
        G = G_matrix(S)
    g = geometry(S)
    out = []
    for b in range(d):
        w_hats = None if g.exact else g.hats(S.eps[b])
        for a in range(d):
            lhs = (E[a] + E[b] + c * np.dot(r, G[a])) * G[a, b]
            quot = 0.0
            for k in range(d):
                if k == a:
                    deriv = _dz_pair(S, S.eps[a], S.eps[b], w_hats)
                    quot += r[a] * deriv / eval_R_prime(S.curve, S.eps[a])
                else:
                    quot += r[k] * (G[k, b] - G[a, b]) / (E[k] - E[a])
            rhs = 1.0 + c * quot
            out.append((rel_residual(lhs, rhs), {"a": a, "b": b}))
    return _reduce("2pt", out)


def residual_ansatz_vii(S: SpectralData, z) -> float:
    """``R(z) + c sum_k r_k calG(z, eps_k) + c sum_k r_k/(R(eps_k)-R(z)) = -R(-z)``."""
    z = complex(z)
    R = S.curve
    c = S.input.coupling
    r = np.array(S.input.r)
    Rz = eval_R(R, z)
    if c == 0.0:
        return rel_residual(Rz, -eval_R(R, -z))
    row = np.array([_pair(S, z, e) for e in S.eps])
    RE = eval_R(R, np.array(S.eps))
    lhs = Rz + c * np.dot(r, row) + c * np.sum(r / (RE - Rz))
    return rel_residual(lhs, -eval_R(R, -z))


def residual_fractions(S: SpectralData, w) -> float:
    """Partial-fraction identity over the fan of ``w`` and the roots ``alpha_k``."""
    w = complex(w)
    g = geometry(S)
    R = S.curve
    Rw = eval_R(R, w)
    if g.exact:
        hats = -np.array(S.eps)
        alpha = np.array(S.eps)
        R0 = 0.0
    else:
        hats = np.array(hat_fan(R, w, ordered=False).hats)
        alpha = g.alpha
        R0 = g.R0
    lhs = 1.0 / (Rw - eval_R(R, -w)) + np.sum(1.0 / (Rw - eval_R(R, -hats)))
    rhs = 1.0 / (2.0 * (Rw - R0)) + np.sum(1.0 / (Rw - eval_R(R, alpha)))
    return rel_residual(lhs, rhs)


def residual_identity(S: SpectralData, z, w) -> float:
    """The Cauchy partial-fraction identity in ``R(z)`` over the hats of ``w``: lhs = 1."""
    g = geometry(S)
    if g.exact:
        return 0.0
    Rz = eval_R(S.curve, complex(z))
    Rmh = g.Rm(g.hats(complex(w)))
    first = tree_prod(Rz - Rmh) / tree_prod(Rz - g.RE)
    rows = tree_prod(g.RE[:, None] - Rmh[None, :]) / tree_prod(g.RE_gaps)
    return rel_residual(first + np.sum(rows / (g.RE - Rz)), 1.0)


def residual_epshatw(S: SpectralData, w) -> float:
    """Cauchy row-sum form of ``calG(eps_k, w)`` against the ``symm`` formula."""
    row = G_eps_row(S, w)
    return max(rel_residual(_pair(S, e, w), v) for e, v in zip(S.eps, row))


def residual_G11_functional(S: SpectralData, z, w) -> float:
    """The linear equation for ``calG(z | w)``; uses the symmetric closed form
    on both sides (the ``eps_k`` values by its finite limit)."""
    z, w = complex(z), complex(w)
    g = geometry(S)
    if g.exact:
        return 0.0
    lam, c = g.lam, g.c
    Rz, Rw = eval_R(g.R, z), eval_R(g.R, w)
    at_eps = np.array([G0_oneone(S, e, w, "symm").value for e in S.eps])
    lhs = (Rz - g.Rm(z)) * G0_oneone(S, z, w, "symm").value - c * np.sum(g.r * at_eps / (g.RE - Rz))
    rhs = lam * (_pair(S, z, w) - _pair(S, w, w)) / (Rz - Rw)
    return rel_residual(lhs, rhs)


def residual_G11_alpha(S: SpectralData, w) -> float:
    """The ``d`` constraints obtained at ``z = alpha_k`` (max over k)."""
    w = complex(w)
    g = geometry(S)
    if g.exact:
        return 0.0
    Rw = eval_R(g.R, w)
    at_eps = np.array([G0_oneone(S, e, w, "symm").value for e in S.eps])
    Gww = _pair(S, w, w)
    worst = 0.0
    for a, Ra in zip(g.alpha, g.Ralpha):
        lhs = g.c * np.sum(g.r * at_eps / (Ra - g.RE))
        rhs = g.lam * (_pair(S, a, w) - Gww) / (Ra - Rw)
        worst = max(worst, rel_residual(lhs, rhs))
    return worst


# ------------------------------------------------------------ series oracle


def series_2pt_iterative(input: ModelInput, K: int):
    """Order-by-order solution of the two-point equation in ``lambda``.

    For every lattice pair we carry the Taylor coefficients in
    ``t = zeta - E_a`` of ``G_m(E_a + t, E_b)``, the order-``m`` coefficient
    in ``lambda``.  The ``k = a`` difference quotient becomes a shift of
    those coefficients, all other terms are products of Taylor series.
    Order ``m`` needs ``t``-degree ``K - m``, so ``K + 1`` coefficients per
    series are enough.  Returns a ``d x d`` nested list of jets.
    """
    E = np.array(input.E)
    r = np.array(input.r)
    N = input.N
    d = input.d
    L = K + 1
    p = np.arange(L)
    # 1/(E_a + E_b + t) as a Taylor series in t, and 1/(E_k - E_a - t)
    inv_sum = np.array([[(-1.0) ** p / (E[a] + E[b]) ** (p + 1) for b in range(d)] for a in range(d)])
    inv_gap = np.zeros((d, d, L))
    for a in range(d):
        for k in range(d):
            if k != a:
                inv_gap[a, k] = 1.0 / (E[k] - E[a]) ** (p + 1)

    def mul(x, y):
        return np.convolve(x, y)[:L]

    T = [inv_sum.copy()]
    for m in range(1, K + 1):
        Tm = np.zeros((d, d, L))
        prev = T[m - 1]
        for a in range(d):
            for b in range(d):
                s = np.zeros(L)
                for k in range(d):
                    quad = np.zeros(L)
                    for i in range(m):
                        quad += mul(T[i][a, k], T[m - 1 - i][a, b])
                    if k == a:
                        q = np.zeros(L)
                        q[:-1] = prev[a, b][1:]
                    else:
                        q = mul(-prev[a, b], inv_gap[a, k])
                        q = q + prev[k, b][0] * inv_gap[a, k]
                    s += r[k] * (q - quad)
                Tm[a, b] = mul(s / N, inv_sum[a, b])
        T.append(Tm)
    return [[SeriesJet([T[m][a, b][0] for m in range(K + 1)]) for b in range(d)] for a in range(d)]


def _hat_jets(eps, rho, E, c, K):
    """Jets of the hats of every ``eps_k``: ``hat[k][j] = -eps_j + delta``.

    ``delta`` is ``O(lambda)`` and solves
    ``delta = c rho_j / (delta - eps_j - E_k - c sum_{m!=j} rho_m/(eps_m - eps_j + delta))``;
    each fixed-point sweep fixes one more order.
    """
    d = len(eps)
    hats = []
    for k in range(d):
        row = []
        for j in range(d):
            delta = SeriesJet.constant(0.0, K)
            for _ in range(K + 1):
                s = SeriesJet.constant(0.0, K)
                for m in range(d):
                    if m != j:
                        s = s + rho[m] / (eps[m] - eps[j] + delta)
                delta = c * rho[j] / (delta - eps[j] - E[k] - c * s)
            row.append(delta - eps[j])
        hats.append(row)
    return hats


def closed_form_2pt_jets(input: ModelInput, K: int):
    """Jets of ``calG_kl`` from the closed product formula, composed with
    the spectral jets."""
    eps, rho = series_spectral(input, K)
    E = np.array(input.E)
    d = input.d
    c = SeriesJet.variable(K, 1.0 / input.N)
    hats = _hat_jets(eps, rho, E, c, K)
    Rp = []
    Q = []
    for k in range(d):
        s = SeriesJet.constant(0.0, K)
        for m in range(d):
            s = s + rho[m] / ((eps[m] + eps[k]) * (eps[m] + eps[k]))
        Rp.append(1.0 + c * s)
        Q.append(jet_product(((eps[k] - eps[j]) / (E[k] - E[j]) for j in range(d) if j != k), K))
    out = [[None] * d for _ in range(d)]
    for k in range(d):
        for l in range(k, d):
            P = jet_product(
                ((-hats[k][j] - hats[l][m]) / (eps[j] + eps[m]) for j in range(d) for m in range(d)), K)
            out[k][l] = out[l][k] = P * Q[k] * Q[l] / (Rp[k] * Rp[l] * (eps[k] + eps[l]))
    return out


def jet_deviation(closed, oracle, name: str = "series_compare") -> ResidualReport:
    samples = []
    for k, row in enumerate(oracle):
        for l, jet in enumerate(row):
            a, b = closed[k][l].coeffs, jet.coeffs
            for m in range(min(a.size, b.size)):
                samples.append((abs(a[m] - b[m]) / max(1.0, abs(b[m])), {"k": k, "l": l, "order": m}))
    return _reduce(name, samples)


def compare_series(input: ModelInput, K: int) -> ResidualReport:
    """Max coefficient deviation between closed-form jets and the oracle."""
    return jet_deviation(closed_form_2pt_jets(input, K), series_2pt_iterative(input, K))


# ------------------------------------------------------------ aggregate


def _guarded(fn):
    try:
        return fn()
    except QKMError:
        return None


def verify_all(S: SpectralData, samples: int = 20, seed: int = 0, series_order: int = 5) -> list:
    """One :class:`ResidualReport` per identity, at deterministic sample points.

    Points that land on a singular set are skipped (the sample count says
    how many were used).
    """
    from .combinatorics import check_moment_cumulant

    rng = np.random.default_rng(seed)
    zs = sample_z(S, samples, rng)
    ws = sample_z(S, samples, rng)
    zetas = sample_near_nodes(S, samples, rng)
    etas = sample_near_nodes(S, samples, rng)
    reports = []

    def collect(name, items):
        out = []
        for i, (fn, point) in enumerate(items):
            res = _guarded(fn)
            if res is not None:
                out.append((res, point))
        reports.append(_reduce(name, out))

    collect("GZW", [((lambda a=a, b=b: residual_GZW(S, a, b)), {"zeta": _c(a), "eta": _c(b)})
                    for a, b in zip(zetas, etas)])
    reports.append(residual_2pt(S))
    collect("ansatz_vii", [((lambda z=z: residual_ansatz_vii(S, z)), {"z": _c(z)}) for z in zs])
    collect("fractions", [((lambda w=w: residual_fractions(S, w)), {"w": _c(w)}) for w in ws])
    if S.input.coupling > 0:
        collect("factorization", [((lambda z=z, w=w: check_factorization(S.curve, w, z)),
                                   {"z": _c(z), "u": _c(w)}) for z, w in zip(zs, ws)])
        g = geometry(S)
        sch = []
        for w in ws:
            def one(w=w):
                nodes = CauchyNodes(g.Rm(g.hats(w)), g.RE, scale=S.scale)
                return verify_schechter(nodes, eval_R(S.curve, w)).max_residual
            sch.append((one, {"w": _c(w)}))
        collect("schechter", sch)
    else:
        reports.append(ResidualReport("factorization", 0.0, 0, {}))
        reports.append(ResidualReport("schechter", 0.0, 0, {}))
    collect("G11_functional", [((lambda z=z, w=w: residual_G11_functional(S, z, w)),
                                {"z": _c(z), "w": _c(w)}) for z, w in zip(zs, ws)])
    reports.append(compare_series(S.input, series_order))
    mc = [check_moment_cumulant(S.input.E, S.input.N, n, seed=seed) for n in (2, 4, 6)]
    reports.append(ResidualReport("moment_cumulant", float(max(m.max_residual for m in mc)),
                                  sum(m.sample_count for m in mc), {}))
    return reports
