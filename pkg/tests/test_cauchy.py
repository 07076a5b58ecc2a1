from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkm.cauchy import (
    CauchyNodes,
    cauchy_inverse,
    cauchy_matrix,
    cauchy_sums,
    verify_schechter,
)
from qkm.errors import NodeCollision

from corpus import random_nodes

EX2 = CauchyNodes((3.0, 4.0), (1.0, 2.0))


def _exact_inverse(a, b):
    """Gauss-Jordan over the rationals."""
    n = len(a)
    M = [[Fraction(1) / (Fraction(a[k]) - Fraction(b[l])) for l in range(n)] + [Fraction(int(i == k)) for i in range(n)]
         for k in range(n)]
    for col in range(n):
        piv = next(i for i in range(col, n) if M[i][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [x / p for x in M[col]]
        for i in range(n):
            if i != col and M[i][col] != 0:
                f = M[i][col]
                M[i] = [x - f * y for x, y in zip(M[i], M[col])]
    return [[M[i][n + j] for j in range(n)] for i in range(n)]


def test_scalar():
    assert cauchy_inverse(CauchyNodes((3.0,), (1.0,))).entries.real.tolist() == [[2.0]]
    row, col = cauchy_sums(CauchyNodes((3.0,), (1.0,)))
    assert row[0] == col[0] == 2.0


def test_worked_example():
    assert np.max(np.abs(cauchy_inverse(EX2).entries - np.array([[-6, 12], [4, -6]]))) < 1e-14
    row, col = cauchy_sums(EX2)
    assert np.max(np.abs(row - [6, -2])) < 1e-14
    assert np.max(np.abs(col - [-2, 6])) < 1e-14


def test_rational_oracle():
    a, b = (Fraction(1, 3), Fraction(5, 2), Fraction(-2), Fraction(7, 4)), (Fraction(1), Fraction(-1, 5), Fraction(3), Fraction(9, 2))
    exact = np.array(_exact_inverse(a, b), dtype=float)
    got = cauchy_inverse(CauchyNodes(tuple(map(float, a)), tuple(map(float, b)))).entries
    assert np.max(np.abs(got - exact)) < 1e-12 * np.max(np.abs(exact))


def test_multiply_back_d5():
    rng = np.random.default_rng(3)
    nodes = CauchyNodes(*random_nodes(rng, 5))
    H = cauchy_matrix(nodes)
    assert np.max(np.sum(np.abs(H @ cauchy_inverse(nodes).entries - np.eye(5)), axis=1)) < 1e-8


def test_sums_match_entries():
    rng = np.random.default_rng(4)
    nodes = CauchyNodes(*random_nodes(rng, 6))
    inv = cauchy_inverse(nodes).entries
    row, col = cauchy_sums(nodes)
    assert np.allclose(row, inv.sum(axis=1), rtol=1e-9, atol=1e-9)
    assert np.allclose(col, inv.sum(axis=0), rtol=1e-9, atol=1e-9)


def test_collisions_rejected():
    with pytest.raises(NodeCollision):
        CauchyNodes((1.0, 1.0), (2.0, 3.0))
    with pytest.raises(NodeCollision):
        CauchyNodes((1.0, 2.0), (3.0, 3.0))
    with pytest.raises(NodeCollision):
        CauchyNodes((1.0, 2.0), (2.0, 3.0))
    with pytest.raises(NodeCollision):
        CauchyNodes((1.0,), (2.0, 3.0))
    with pytest.raises(NodeCollision):
        verify_schechter(EX2, 3.0)


def test_schechter_worked_example():
    rep = verify_schechter(EX2, 0.0)
    assert rep.max_residual < 1e-12 and not rep.warnings


def test_schechter_warns_when_close():
    nodes = CauchyNodes((1.0, 2.0 + 1e-7), (2.0, 5.0))
    rep = verify_schechter(nodes, 0.5j)
    assert rep.warnings
    assert np.isfinite(rep.max_residual)


def test_schechter_random():
    rng = np.random.default_rng(6)
    for d in range(1, 9):
        nodes = CauchyNodes(*random_nodes(rng, d))
        for x in (0.3 + 7.1j, -6.0, 2.2 - 0.4j):
            try:
                rep = verify_schechter(nodes, x)
            except NodeCollision:
                continue
            assert rep.max_residual < 1e-9, rep.residuals


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 8))
def test_property_multiply_back(seed, d):
    # float64 multiply-back is limited by || |H| |H^-1| ||, which grows fast
    # for crowded real nodes; the closed form itself is accurate entrywise
    nodes = CauchyNodes(*random_nodes(np.random.default_rng(seed), d))
    H, Hinv = cauchy_matrix(nodes), cauchy_inverse(nodes).entries
    err = np.max(np.sum(np.abs(H @ Hinv - np.eye(d)), axis=1))
    bound = np.max(np.sum(np.abs(H) @ np.abs(Hinv), axis=1))
    assert err < max(1e-8, 8 * d * np.finfo(float).eps * bound)


@settings(max_examples=40)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 6))
def test_property_swap_duality(seed, d):
    # swapping the node sets negates and transposes H, hence its inverse
    a, b = random_nodes(np.random.default_rng(seed), d)
    one = cauchy_inverse(CauchyNodes(a, b)).entries
    two = cauchy_inverse(CauchyNodes(b, a)).entries
    assert np.allclose(two, -one.T, rtol=1e-10, atol=1e-10 * np.max(np.abs(one)))
