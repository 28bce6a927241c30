"""Value types: plain doubles and small dense b x b blocks.

A block value is a C-contiguous ``(b, b)`` float64 array. Sparse matrices
store their block values stacked as ``(nnz, b, b)``; b = 1 matrices store a
flat ``(nnz,)`` array of doubles instead.
"""

import numba as nb
import numpy as np

from .errors import SingularBlock

SUPPORTED_BLOCK_SIZES = (1, 2, 3, 6)

#: pivots below this magnitude (after partial pivoting) are singular
PIVOT_TOLERANCE = 1e-300


def check_block_size(b):
    if b not in SUPPORTED_BLOCK_SIZES:
        raise ValueError(f"unsupported block size {b}; expected one of {SUPPORTED_BLOCK_SIZES}")
    return b


def block_identity(b):
    return np.eye(b)


def block_zero(b):
    return np.zeros((b, b))


@nb.njit(cache=True)
def lu_invert(m, out):
    """Invert ``m`` into ``out`` by LU with partial pivoting.

    Returns False when a pivot falls below PIVOT_TOLERANCE.
    """
    n = m.shape[0]
    a = m.copy()
    perm = np.arange(n)
    for k in range(n):
        p = k
        pmax = abs(a[k, k])
        for i in range(k + 1, n):
            if abs(a[i, k]) > pmax:
                pmax = abs(a[i, k])
                p = i
        if pmax < PIVOT_TOLERANCE:
            return False
        if p != k:
            for j in range(n):
                t = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = t
            t2 = perm[k]
            perm[k] = perm[p]
            perm[p] = t2
        for i in range(k + 1, n):
            a[i, k] /= a[k, k]
            for j in range(k + 1, n):
                a[i, j] -= a[i, k] * a[k, j]
    # solve LU X = P I column by column
    for c in range(n):
        x = np.zeros(n)
        for i in range(n):
            s = 1.0 if perm[i] == c else 0.0
            for j in range(i):
                s -= a[i, j] * x[j]
            x[i] = s
        for i in range(n - 1, -1, -1):
            s = x[i]
            for j in range(i + 1, n):
                s -= a[i, j] * x[j]
            x[i] = s / a[i, i]
        for i in range(n):
            out[i, c] = x[i]
    return True


def block_invert(m):
    """Return the inverse of a square block (or the reciprocal of a scalar).

    Raises SingularBlock if elimination meets a pivot smaller than 1e-300.
    """
    if np.ndim(m) == 0:
        if abs(m) < PIVOT_TOLERANCE:
            raise SingularBlock(f"scalar pivot {m!r} is singular")
        return 1.0 / m
    m = np.ascontiguousarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square block, got shape {m.shape}")
    out = np.empty_like(m)
    if not lu_invert(m, out):
        raise SingularBlock("block is singular to working precision")
    return out


def block_scalar_norm(m):
    """Frobenius norm of a block; absolute value for a scalar."""
    if np.ndim(m) == 0:
        return abs(float(m))
    return float(np.sqrt(np.sum(np.square(m))))
