"""Closed-form inverse of Cauchy matrices ``H_kl = 1 / (a_k - b_l)``.

With ``A(x) = prod_i (x - a_i)`` and ``B(y) = prod_j (y - b_j)``,

    (H^-1)_kl = A(b_k) B(a_l) / ((b_k - a_l) A'(a_l) B'(b_k)),

which is the product of the two Lagrange basis polynomials evaluated at the
opposite node set.  All products are taken pairwise (balanced tree) and the
derivatives at the nodes as leave-one-out products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._numeric import leave_one_out, tree_prod
from .errors import NodeCollision

SEPARATION_TOL = 1e-12
WARN_SEPARATION = 1e-6


@dataclass(frozen=True)
class CauchyNodes:
    a: tuple
    b: tuple
    scale: float | None = None

    def __post_init__(self):
        a = tuple(complex(x) for x in np.ravel(self.a))
        b = tuple(complex(x) for x in np.ravel(self.b))
        if len(a) != len(b) or not a:
            raise NodeCollision("a and b must be non-empty and of equal length")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.scale is None:
            object.__setattr__(self, "scale", max(1.0, max(abs(x) for x in a + b)))
        tol = SEPARATION_TOL * self.scale
        A, B = self.a_array, self.b_array
        if _offdiag_min(np.abs(A[:, None] - A[None, :])) <= tol:
            raise NodeCollision("the nodes a_i are not pairwise distinct")
        if _offdiag_min(np.abs(B[:, None] - B[None, :])) <= tol:
            raise NodeCollision("the nodes b_j are not pairwise distinct")
        if np.min(np.abs(A[:, None] - B[None, :])) <= tol:
            raise NodeCollision("some a_i coincides with some b_j")

    @property
    def d(self) -> int:
        return len(self.a)

    @property
    def a_array(self) -> np.ndarray:
        return np.array(self.a)

    @property
    def b_array(self) -> np.ndarray:
        return np.array(self.b)

    @property
    def min_cross_gap(self) -> float:
        return float(np.min(np.abs(self.a_array[:, None] - self.b_array[None, :])))


def _offdiag_min(m) -> float:
    if m.shape[0] < 2:
        return np.inf
    m = m.copy()
    np.fill_diagonal(m, np.inf)
    return float(m.min())


@dataclass(frozen=True)
class CauchyInverse:
    nodes: CauchyNodes
    entries: np.ndarray = field(repr=False)


def cauchy_matrix(nodes: CauchyNodes) -> np.ndarray:
    return 1.0 / (nodes.a_array[:, None] - nodes.b_array[None, :])


def _node_values(nodes: CauchyNodes):
    """``A(b_k)``, ``B(a_l)``, ``A'(a_l)``, ``B'(b_k)``."""
    a, b = nodes.a_array, nodes.b_array
    A_at_b = tree_prod(b[:, None] - a[None, :])
    B_at_a = tree_prod(a[:, None] - b[None, :])
    dA = tree_prod(leave_one_out(a))
    dB = tree_prod(leave_one_out(b))
    return A_at_b, B_at_a, dA, dB


def cauchy_inverse(nodes: CauchyNodes) -> CauchyInverse:
    a, b = nodes.a_array, nodes.b_array
    A_at_b, B_at_a, dA, dB = _node_values(nodes)
    entries = (A_at_b / dB)[:, None] * (B_at_a / dA)[None, :] / (b[:, None] - a[None, :])
    return CauchyInverse(nodes, entries)


def cauchy_sums(nodes: CauchyNodes):
    """Row and column sums of ``H^-1`` in closed form:
    ``row_k = -A(b_k)/B'(b_k)``, ``col_l = B(a_l)/A'(a_l)``."""
    A_at_b, B_at_a, dA, dB = _node_values(nodes)
    return -A_at_b / dB, B_at_a / dA


@dataclass
class SchechterReport:
    x: complex
    residuals: dict
    warnings: list

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


def _rel(lhs, rhs) -> float:
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))))


def verify_schechter(nodes: CauchyNodes, x: complex) -> SchechterReport:
    """Residuals of the interpolation identities satisfied by ``H^-1`` at ``x``.

    ``row12``: ``B_k(x) A(b_k) / A(x) = sum_l Hinv_kl / (a_l - x)`` for all k;
    ``col12``: ``A_l(x) B(a_l) / B(x) = sum_k Hinv_kl / (x - b_k)`` for all l;
    ``res_b`` and ``res_a``: the two sum-to-one identities for every j.
    """
    a, b = nodes.a_array, nodes.b_array
    x = complex(x)
    if np.min(np.abs(np.concatenate([a, b]) - x)) <= SEPARATION_TOL * nodes.scale:
        raise NodeCollision("x coincides with a node")
    warnings = []
    if nodes.min_cross_gap < WARN_SEPARATION * nodes.scale:
        warnings.append(f"ill-conditioned nodes: min |a_i - b_j| = {nodes.min_cross_gap:.3g}")
    Hinv = cauchy_inverse(nodes).entries
    A_at_b, B_at_a, dA, dB = _node_values(nodes)
    Ax = tree_prod(x - a)
    Bx = tree_prod(x - b)
    Bk_x = Bx / ((x - b) * dB)
    Al_x = Ax / ((x - a) * dA)
    row12 = _rel(Bk_x * A_at_b / Ax, Hinv @ (1.0 / (a - x)))
    col12 = _rel(Al_x * B_at_a / Bx, (1.0 / (x - b)) @ Hinv)
    res_b = _rel(np.sum(A_at_b[None, :] / ((b[None, :] - a[:, None]) * dB[None, :]), axis=1), 1.0)
    res_a = _rel(np.sum(B_at_a[None, :] / ((a[None, :] - b[:, None]) * dA[None, :]), axis=1), 1.0)
    return SchechterReport(x, {"row12": row12, "col12": col12, "res_b": res_b, "res_a": res_a}, warnings)
