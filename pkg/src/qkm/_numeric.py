import numpy as np


def tree_prod(x, axis=-1):
    """Product along ``axis`` by pairwise (balanced-tree) multiplication.

    Keeps the rounding error growth logarithmic in the number of factors,
    which matters for products of near-cancelling differences.
    """
    x = np.moveaxis(np.asarray(x), axis, -1)
    if x.shape[-1] == 0:
        return np.ones(x.shape[:-1], dtype=x.dtype)[()]
    while x.shape[-1] > 1:
        n = x.shape[-1]
        paired = x[..., 0 : n - 1 : 2] * x[..., 1:n:2]
        if n % 2:
            paired = np.concatenate([paired, x[..., -1:]], axis=-1)
        x = paired
    return x[..., 0][()]


def rel_residual(lhs, rhs) -> float:
    """``|lhs - rhs| / max(1, |lhs|)``, the residual convention used throughout."""
    return float(abs(lhs - rhs) / max(1.0, abs(lhs)))


def leave_one_out(x):
    """Matrix ``M[i, j] = x[i] - x[j]`` with the diagonal set to 1."""
    x = np.asarray(x)
    m = x[:, None] - x[None, :]
    np.fill_diagonal(m, 1.0)
    return m
