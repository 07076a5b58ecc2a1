from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import qkm.spectral as spectral
from qkm.errors import ChamberExit, Divergence, DomainViolation, InvalidInput
from qkm.spectral import (
    ModelInput,
    SolverOptions,
    jacobian,
    residuals,
    series_spectral,
    solve_spectral,
)

from corpus import corpus, random_instance

# high-precision reference for d = 1, E = r = N = 1, lambda = 0.1
EPS_D1 = 1.046725141699712659712
RHO_D1 = 0.978167611331417731413
# exact Taylor coefficients of the same instance
EPS_D1_SERIES = [1, Fraction(1, 2), Fraction(-3, 8), Fraction(9, 16), Fraction(-135, 128),
                 Fraction(567, 256), Fraction(-5103, 1024)]
RHO_D1_SERIES = [1, Fraction(-1, 4), Fraction(3, 8), Fraction(-45, 64), Fraction(189, 128),
                 Fraction(-1701, 512), Fraction(8019, 1024)]
# d = 2, E = (1, 2), r = (1, 1), N = 2, lambda = 0.05
D2 = ModelInput((1.0, 2.0), (1.0, 1.0), 2.0, 0.05)
EPS_D2 = (1.0203489890961835658, 2.0143467472946915214)
RHO_D2 = (0.99141937665947194186, 0.99579260465893672792)


def test_input_validation():
    with pytest.raises(InvalidInput):
        ModelInput((1.0, 1.0), (1.0, 1.0))
    with pytest.raises(InvalidInput):
        ModelInput((1.0,), (1.0, 2.0))
    with pytest.raises(InvalidInput):
        ModelInput((-1.0,), (1.0,))
    with pytest.raises(InvalidInput):
        ModelInput((1.0,), (0.0,))
    with pytest.raises(InvalidInput):
        ModelInput((1.0,), (1.0,), None, -0.1)
    with pytest.raises(InvalidInput):
        ModelInput((1.0,), (1.0,), 0.0, 0.1)
    assert ModelInput((1.0, 2.0), (1.5, 2.0)).N == 3.5


def test_residuals_reference_point():
    mi = ModelInput((1.0, 2.5), (1.0, 3.0), None, 0.0)
    f, g = residuals(mi, mi.E, mi.r)
    assert np.all(f == 0) and np.all(g == 0)


def test_residuals_at_unperturbed_data():
    mi = ModelInput((1.0, 2.5), (1.0, 3.0), None, 0.3)
    f, _ = residuals(mi, mi.E, mi.r)
    E, r = np.array(mi.E), np.array(mi.r)
    expect = -mi.coupling * np.sum(r[None, :] / (E[:, None] + E[None, :]), axis=1)
    assert np.allclose(f, expect, rtol=1e-15)


def test_residuals_domain():
    mi = ModelInput((1.0, 2.0), (1.0, 1.0), None, 0.1)
    with pytest.raises(DomainViolation):
        residuals(mi, (1.0, -1.0), (1.0, 1.0))


def test_jacobian_zero_coupling_block():
    mi = ModelInput((1.0, 2.5, 4.0), (1.0, 3.0, 2.0), None, 0.0)
    J = jacobian(mi, mi.E, mi.r)
    expect = np.block([[np.eye(3), np.zeros((3, 3))], [np.zeros((3, 3)), np.diag(1 / np.array(mi.r))]])
    assert np.array_equal(J, expect)


def test_jacobian_matches_finite_difference():
    mi = ModelInput((0.7, 1.6, 3.0), (1.2, 2.0, 1.0), None, 0.4)
    x = np.array([0.8, 1.7, 3.05, 1.1, 1.8, 0.95])
    J = jacobian(mi, x[:3], x[3:])
    h = 1e-6
    for j in range(6):
        dx = np.zeros(6)
        dx[j] = h
        Fp = np.concatenate(residuals(mi, (x + dx)[:3], (x + dx)[3:]))
        Fm = np.concatenate(residuals(mi, (x - dx)[:3], (x - dx)[3:]))
        assert np.allclose((Fp - Fm) / (2 * h), J[:, j], atol=1e-8)


def test_zero_coupling_solve():
    mi = ModelInput((1.0, 2.0), (1.0, 3.0), None, 0.0)
    S = solve_spectral(mi)
    assert S.eps == mi.E and S.rho == mi.r and S.steps == 0


def test_solve_d1_reference():
    S = solve_spectral(ModelInput((1.0,), (1.0,), 1.0, 0.1))
    assert S.eps[0] == pytest.approx(EPS_D1, rel=1e-14)
    assert S.rho[0] == pytest.approx(RHO_D1, rel=1e-14)
    assert abs(S.eps[0] - 1.05) < 0.01 and abs(S.rho[0] - 0.975) < 0.01


def test_solve_d2_reference():
    S = solve_spectral(D2)
    assert S.eps == pytest.approx(EPS_D2, rel=1e-14)
    assert S.rho == pytest.approx(RHO_D2, rel=1e-14)
    assert S.residual_max < 1e-12


def test_series_d1_exact():
    e, r = series_spectral(ModelInput((1.0,), (1.0,), 1.0, 0.0), 6)
    assert np.allclose(e[0].coeffs, [float(x) for x in EPS_D1_SERIES], rtol=1e-13, atol=0)
    assert np.allclose(r[0].coeffs, [float(x) for x in RHO_D1_SERIES], rtol=1e-13, atol=0)


def test_series_order_zero_and_one():
    mi = ModelInput((0.9, 2.2, 3.4), (1.0, 2.5, 1.5), 4.0)
    e, r = series_spectral(mi, 1)
    E, R = np.array(mi.E), np.array(mi.r)
    Ssum = E[:, None] + E[None, :]
    assert [j[0] for j in e] == list(mi.E) and [j[0] for j in r] == list(mi.r)
    assert np.allclose([j[1] for j in e], np.sum(R[None, :] / Ssum, axis=1) / mi.N, rtol=1e-14)
    assert np.allclose([j[1] for j in r], -R * np.sum(R[None, :] / Ssum**2, axis=1) / mi.N, rtol=1e-14)


def test_series_rejects_negative_order():
    with pytest.raises(InvalidInput):
        series_spectral(D2, -1)


@pytest.mark.parametrize("K", [0, 1, 2, 3, 4])
def test_series_taylor_remainder(K):
    # the remainder of an order-K jet scales like lambda**(K+1)
    mi = ModelInput((0.8, 1.9, 3.1), (1.0, 2.0, 1.5), None, 0.0)
    e, r = series_spectral(mi, K)
    errs = []
    for lam in (0.02, 0.01):
        S = solve_spectral(mi.with_lambda(lam))
        errs.append(max(max(abs(e[k](lam) - S.eps[k]), abs(r[k](lam) - S.rho[k])) for k in range(3)))
    ratio = errs[0] / errs[1]
    assert 0.8 * 2 ** (K + 1) < ratio < 1.25 * 2 ** (K + 1)


def test_homotopy_corpus():
    for mi in corpus(100, seed=11):
        S = solve_spectral(mi)
        assert S.residual_max < 1e-12 * mi.scale
        assert min(S.eps) > 0 and min(S.rho) > 0


def test_divergence_reported():
    with pytest.raises(Divergence):
        solve_spectral(D2, SolverOptions(tol=1e-30))


def test_chamber_exit_reported(monkeypatch):
    def flipped(input, x, c, opts, target):
        return -np.abs(x), 0

    monkeypatch.setattr(spectral, "_newton", flipped)
    with pytest.raises(ChamberExit):
        solve_spectral(D2)


def test_large_coupling_stays_positive():
    S = solve_spectral(ModelInput((0.5, 1.0, 4.0), (1.0, 1.0, 3.0), None, 20.0))
    assert min(S.eps) > 0 and min(S.rho) > 0


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1))
def test_property_monotone_deformation(seed):
    mi = random_instance(np.random.default_rng(seed))
    e, r = series_spectral(mi, 1)
    assert all(j[1] > 0 for j in e)
    assert all(j[1] < 0 for j in r)


@settings(max_examples=25)
@given(seed=st.integers(0, 2**32 - 1))
def test_property_solution_solves_system(seed):
    mi = random_instance(np.random.default_rng(seed))
    S = solve_spectral(mi)
    f, g = residuals(mi, S.eps, S.rho)
    assert max(np.max(np.abs(f)), np.max(np.abs(g))) < 1e-12 * mi.scale
