"""Deterministic random instances shared by the test modules."""

import numpy as np

from qkm.spectral import ModelInput

MIN_SEPARATION = 0.05


def random_E(rng, d, low=0.5, high=5.0, sep=MIN_SEPARATION):
    while True:
        E = np.sort(rng.uniform(low, high, d))
        if d == 1 or np.diff(E).min() >= sep:
            return E


def random_instance(rng, d=None, lam_max=0.2):
    if d is None:
        d = int(rng.integers(1, 7))
    E = random_E(rng, d)
    r = rng.uniform(1.0, 3.0, d)
    lam = lam_max * (1.0 - rng.random())      # in (0, lam_max]
    return ModelInput(tuple(E), tuple(r), None, lam)


def corpus(n, seed, d_max=6, lam_max=0.2):
    rng = np.random.default_rng(seed)
    return [random_instance(rng, int(rng.integers(1, d_max + 1)), lam_max) for _ in range(n)]


def regular_points(S, n, rng):
    """Complex points off the real axis in the right half-plane."""
    s = S.scale
    re = rng.uniform(0.1, 1.5, n) * s
    im = rng.choice([-1.0, 1.0], n) * rng.uniform(0.1, 1.0, n) * s
    return re + 1j * im


def random_nodes(rng, d, sep=0.1, width=5.0):
    """2d distinct points (real or complex) with all pairwise gaps >= sep,
    split into the Cauchy node sets a and b."""
    cplx = rng.random() < 0.5
    while True:
        pts = rng.uniform(-width, width, 2 * d)
        if cplx:
            pts = pts + 1j * rng.uniform(-width, width, 2 * d)
        gaps = np.abs(pts[:, None] - pts[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() >= sep:
            return tuple(pts[:d]), tuple(pts[d:])
