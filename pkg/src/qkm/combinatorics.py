"""Moment-cumulant bookkeeping for the matrix measure, in exact arithmetic.

A moment of matrix entries ``<Phi_{k1 l1} ... Phi_{kn ln}>`` decomposes into
cumulants over set partitions of the ``n`` factors; for this measure only
blocks of even size contribute.  At ``lambda = 0`` the measure is Gaussian
with covariance ``<Phi_{jk} Phi_{lm}> = delta_kl delta_jm / (N (E_j + E_k))``,
so all moments follow from Wick pairings and the only nonzero cumulant is
the two-point one, ``1 / (N (E_a + E_b))``.

Indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import factorial, prod

import numpy as np

from .errors import InvalidType, OddN


@dataclass(frozen=True)
class SetPartition:
    n: int
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        seen = sorted(i for b in blocks for i in b)
        if any(not b for b in blocks) or seen != list(range(self.n)):
            raise ValueError("blocks must be non-empty, disjoint and cover 0..n-1")
        object.__setattr__(self, "blocks", blocks)


@dataclass(frozen=True)
class CycleType:
    """``counts[i-1]`` is the number of cycles of length ``i``."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if any(c < 0 for c in counts):
            raise InvalidType("cycle counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum((i + 1) * c for i, c in enumerate(self.counts))

    @property
    def cycles(self) -> int:
        return sum(self.counts)


def set_partitions(items):
    """All set partitions of a list, each as a list of blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def _even_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    # the block containing `first` takes an odd number of the remaining items
    for size in range(1, len(rest) + 1, 2):
        for mates in combinations(rest, size):
            left = [x for x in rest if x not in mates]
            for part in _even_partitions(left):
                yield [[first, *mates]] + part


def even_partitions(n: int) -> list:
    """All partitions of ``{0..n-1}`` whose blocks all have even size."""
    if n % 2:
        raise OddN(f"n must be even, got {n}")
    if n < 0:
        raise OddN("n must be non-negative")
    return [SetPartition(n, tuple(tuple(b) for b in p)) for p in _even_partitions(list(range(n)))]


def cycle_type_count(t: CycleType) -> int:
    """Number of permutations of ``n`` letters with cycle type ``t``:
    ``n! / prod_i (i**l_i * l_i!)``."""
    n = t.n
    den = prod((i + 1) ** c * factorial(c) for i, c in enumerate(t.counts))
    return factorial(n) // den


def cycle_types(n: int):
    """Every cycle type of ``n`` letters (integer partitions of ``n``)."""
    def parts(m, largest):
        if m == 0:
            yield []
            return
        for k in range(min(m, largest), 0, -1):
            for rest in parts(m - k, k):
                yield [k] + rest

    for p in parts(n, n):
        counts = [0] * n
        for k in p:
            counts[k - 1] += 1
        yield CycleType(tuple(counts))


def _as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _covariance(E, N, p, q) -> Fraction:
    (k1, l1), (k2, l2) = p, q
    if l1 == k2 and k1 == l2:
        return 1 / (N * (E[k1] + E[l1]))
    return Fraction(0)


def _perfect_matchings(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for m in _perfect_matchings(rest[:i] + rest[i + 1:]):
            yield [(first, other)] + m


def gaussian_moment(E, N, pairs) -> Fraction:
    """``<prod_i Phi_{k_i l_i}>`` at ``lambda = 0`` as an exact fraction.

    ``E`` may hold floats; they are converted exactly.  An odd number of
    factors gives 0.
    """
    E = [_as_fraction(e) for e in E]
    N = _as_fraction(N)
    pairs = [tuple(p) for p in pairs]
    if len(pairs) % 2:
        return Fraction(0)
    total = Fraction(0)
    for m in _perfect_matchings(list(range(len(pairs)))):
        term = Fraction(1)
        for i, j in m:
            term *= _covariance(E, N, pairs[i], pairs[j])
            if term == 0:
                break
        total += term
    return total


def gaussian_cumulant(E, N, pairs) -> Fraction:
    """Cumulant at ``lambda = 0``: only length 2 survives."""
    if len(pairs) != 2:
        return Fraction(0)
    return _covariance([_as_fraction(e) for e in E], _as_fraction(N), tuple(pairs[0]), tuple(pairs[1]))


def moment_from_cumulants(E, N, pairs, cumulant=gaussian_cumulant) -> Fraction:
    """Sum over even set partitions of products of block cumulants."""
    total = Fraction(0)
    for part in even_partitions(len(pairs)):
        term = Fraction(1)
        for block in part.blocks:
            term *= cumulant(E, N, [pairs[i] for i in block])
            if term == 0:
                break
        total += term
    return total


def _sample_pairs(d, n, rng):
    """Index tuples with a good chance of a nonzero Gaussian moment."""
    out = []
    for _ in range(n // 2):
        a, b = (int(x) for x in rng.integers(0, d, 2))
        out += [(a, b), (b, a)]
    perm = rng.permutation(len(out))
    return [out[i] for i in perm]


def check_moment_cumulant(E, N, n: int, samples: int = 8, seed: int = 0):
    """Exact comparison of Wick moments with the cumulant assembly.

    Index tuples are drawn deterministically from ``seed``; half are built
    from transposed pairs (nonzero moments), half uniformly.  The residual
    is the largest exact difference, which must be 0.
    """
    from .verify import ResidualReport

    if n not in (2, 4, 6):
        raise InvalidType("check_moment_cumulant supports n in {2, 4, 6}")
    d = len(E)
    rng = np.random.default_rng(seed + 1000 * n)
    worst, where = Fraction(0), {}
    for s in range(samples):
        if s % 2 == 0:
            pairs = _sample_pairs(d, n, rng)
        else:
            pairs = [tuple(int(x) for x in rng.integers(0, d, 2)) for _ in range(n)]
        diff = abs(gaussian_moment(E, N, pairs) - moment_from_cumulants(E, N, pairs))
        if diff > worst or not where:
            worst, where = diff, {"pairs": [list(p) for p in pairs]}
    return ResidualReport(f"moment_cumulant_{n}", float(worst), samples, where)
