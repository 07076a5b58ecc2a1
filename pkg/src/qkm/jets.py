"""Truncated power series in the coupling.

A :class:`SeriesJet` of order ``K`` holds the coefficients of
``lambda**0 ... lambda**K``; everything above ``K`` is unknown, not zero.
Arithmetic between jets of different order truncates to the smaller one::

    >>> lam = SeriesJet.variable(3)
    >>> (1 / (1 - lam)).coeffs
    array([1., 1., 1., 1.])
"""

from __future__ import annotations

from numbers import Number

import numpy as np


class SeriesJet:
    __slots__ = ("coeffs",)
    # numpy scalars must defer to our reflected operators instead of
    # treating a jet as a sequence
    __array_ufunc__ = None

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=np.result_type(np.asarray(coeffs), float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("a jet needs a non-empty 1-d coefficient list")
        self.coeffs = c

    @classmethod
    def constant(cls, value, order: int) -> "SeriesJet":
        c = np.zeros(order + 1, dtype=np.result_type(value, float))
        c[0] = value
        return cls(c)

    @classmethod
    def variable(cls, order: int, slope=1.0) -> "SeriesJet":
        """The jet ``slope * lambda`` truncated at ``order``."""
        c = np.zeros(order + 1, dtype=np.result_type(slope, float))
        if order >= 1:
            c[1] = slope
        return cls(c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __repr__(self):
        return f"SeriesJet({self.coeffs.tolist()!r})"

    def __len__(self):
        return self.coeffs.size

    def __getitem__(self, i):
        return self.coeffs[i]

    def truncate(self, order: int) -> "SeriesJet":
        return SeriesJet(self.coeffs[: order + 1])

    def _coerce(self, other):
        if isinstance(other, SeriesJet):
            k = min(self.order, other.order)
            return self.coeffs[: k + 1], other.coeffs[: k + 1]
        if isinstance(other, Number) or np.ndim(other) == 0:
            o = np.zeros(self.coeffs.size, dtype=np.result_type(other, float))
            o[0] = other
            return self.coeffs, o
        return NotImplemented

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        return SeriesJet(pair[0] + pair[1])

    __radd__ = __add__

    def __neg__(self):
        return SeriesJet(-self.coeffs)

    def __sub__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        return SeriesJet(pair[0] - pair[1])

    def __rsub__(self, other):
        pair = self._coerce(other)
        if pair is NotImplemented:
            return NotImplemented
        return SeriesJet(pair[1] - pair[0])

    def __mul__(self, other):
        if isinstance(other, SeriesJet):
            a, b = self._coerce(other)
            return SeriesJet(np.convolve(a, b)[: a.size])
        if isinstance(other, Number) or np.ndim(other) == 0:
            return SeriesJet(self.coeffs * other)
        return NotImplemented

    __rmul__ = __mul__

    def reciprocal(self) -> "SeriesJet":
        a = self.coeffs
        if a[0] == 0:
            raise ZeroDivisionError("jet with vanishing constant term has no reciprocal")
        b = np.zeros_like(a)
        b[0] = 1.0 / a[0]
        for n in range(1, a.size):
            b[n] = -np.dot(a[1 : n + 1], b[n - 1 :: -1][:n]) / a[0]
        return SeriesJet(b)

    def __truediv__(self, other):
        if isinstance(other, SeriesJet):
            return self * other.reciprocal()
        if isinstance(other, Number) or np.ndim(other) == 0:
            return SeriesJet(self.coeffs / other)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Number) or np.ndim(other) == 0:
            return self.reciprocal() * other
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = SeriesJet.constant(1.0, self.order)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __call__(self, lam):
        """Evaluate the truncated polynomial at ``lam`` (Horner)."""
        acc = 0.0
        for c in self.coeffs[::-1]:
            acc = acc * lam + c
        return acc


def jet_product(jets, order: int) -> SeriesJet:
    """Product of an iterable of jets; the empty product is 1."""
    out = SeriesJet.constant(1.0, order)
    for j in jets:
        out = out * j
    return out
