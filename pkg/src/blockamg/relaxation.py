"""V-cycle smoothers: ILU(0) in scalar or block arithmetic, and damped Jacobi."""

import numba as nb
import numpy as np

from . import sparse
from .errors import DimensionMismatch, MissingDiagonal, SingularBlock, SingularPivot
from .sparse import SparseMatrix
from .values import block_invert, lu_invert

JACOBI_DAMPING = 0.72


@nb.njit(cache=True)
def _ilu0_factor(ptr, col, val, dia):
    """In-place IKJ ILU(0). Returns (inverted pivots, index of failed row or -1)."""
    n = len(ptr) - 1
    b = val.shape[1]
    dinv = np.zeros((n, b, b))
    work = np.full(n, -1, dtype=np.int64)
    tmp = np.empty((b, b))
    for i in range(n):
        for j in range(ptr[i], ptr[i + 1]):
            work[col[j]] = j
        for j in range(ptr[i], dia[i]):
            k = col[j]
            # L_ik = a_ik * inv(U_kk); block products do not commute
            for r in range(b):
                for s in range(b):
                    acc = 0.0
                    for t in range(b):
                        acc += val[j, r, t] * dinv[k, t, s]
                    tmp[r, s] = acc
            for r in range(b):
                for s in range(b):
                    val[j, r, s] = tmp[r, s]
            for kk in range(dia[k] + 1, ptr[k + 1]):
                w = work[col[kk]]
                if w < 0:
                    continue
                for r in range(b):
                    for s in range(b):
                        acc = val[w, r, s]
                        for t in range(b):
                            acc -= val[j, r, t] * val[kk, t, s]
                        val[w, r, s] = acc
        if b == 1:
            if val[dia[i], 0, 0] == 0.0:
                return dinv, i
            dinv[i, 0, 0] = 1.0 / val[dia[i], 0, 0]
        elif not lu_invert(val[dia[i]], dinv[i]):
            return dinv, i
        for j in range(ptr[i], ptr[i + 1]):
            work[col[j]] = -1
    return dinv, -1


@nb.njit(cache=True)
def _ilu0_solve(ptr, col, val, dia, dinv, x):
    """Overwrite x with (LU)^-1 x."""
    n = len(ptr) - 1
    b = val.shape[1]
    acc = np.empty(b)
    for i in range(n):
        for r in range(b):
            acc[r] = x[i, r]
        for j in range(ptr[i], dia[i]):
            c = col[j]
            for r in range(b):
                s = acc[r]
                for t in range(b):
                    s -= val[j, r, t] * x[c, t]
                acc[r] = s
        for r in range(b):
            x[i, r] = acc[r]
    for i in range(n - 1, -1, -1):
        for r in range(b):
            acc[r] = x[i, r]
        for j in range(dia[i] + 1, ptr[i + 1]):
            c = col[j]
            for r in range(b):
                s = acc[r]
                for t in range(b):
                    s -= val[j, r, t] * x[c, t]
                acc[r] = s
        for r in range(b):
            s = 0.0
            for t in range(b):
                s += dinv[i, r, t] * acc[t]
            x[i, r] = s


class Ilu0:
    """Zero fill-in incomplete LU factors of a (block) CSR matrix.

    L (unit lower, diagonal implicit) and U share one CSR array in the
    pattern of A; inverted pivots are kept separately.
    """

    def __init__(self, A):
        if A.nrows != A.ncols:
            raise DimensionMismatch("ILU(0) needs a square matrix")
        dia = A.diagonal_positions()
        if np.any(dia < 0):
            raise MissingDiagonal(f"row {int(np.flatnonzero(dia < 0)[0])} has no diagonal entry")
        self.b = A.block_size
        self.ptr = A.ptr
        self.col = A.col
        self.dia = dia
        self.val = A.blocks.copy()
        self.dinv, bad = _ilu0_factor(self.ptr, self.col, self.val, self.dia)
        if bad >= 0:
            raise SingularPivot(f"ILU(0) pivot of row {bad} is singular")

    @property
    def n(self):
        return len(self.ptr) - 1

    def solve(self, r):
        """Return (LU)^-1 r for r in scalar layout."""
        x = np.array(r, dtype=np.float64)
        _ilu0_solve(self.ptr, self.col, self.val, self.dia, self.dinv, x.reshape(-1, self.b))
        return x

    def apply(self, A, f, u):
        """One smoothing step ``u += (LU)^-1 (f - A u)``, in place."""
        r = sparse.spmv(A, u, f.copy(), alpha=-1.0, beta=1.0)
        u += self.solve(r)
        return u

    def lower(self):
        """L with its unit diagonal stored explicitly."""
        rows = np.repeat(np.arange(self.n), np.diff(self.ptr))
        strict = self.col < rows
        b = self.b
        L = _pattern_matrix(self.n, rows[strict], self.col[strict], self.val[strict])
        return sparse.add(L, SparseMatrix.identity(self.n, b) if b > 1 else _scalar_identity(self.n))

    def upper(self):
        """U including its diagonal pivots."""
        rows = np.repeat(np.arange(self.n), np.diff(self.ptr))
        keep = self.col >= rows
        return _pattern_matrix(self.n, rows[keep], self.col[keep], self.val[keep])

    def nbytes(self):
        """Combined factor CSR plus the inverted pivot store."""
        n, nnz, b = self.n, len(self.col), self.b
        return (n + 1) * sparse.INDEX_BYTES + nnz * sparse.INDEX_BYTES + (nnz + n) * b * b * sparse.VALUE_BYTES


def _scalar_identity(n):
    return SparseMatrix.identity(n)


def _pattern_matrix(n, rows, cols, vals3):
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=ptr[1:])
    val = vals3.reshape(-1) if vals3.shape[1] == 1 else vals3
    return SparseMatrix(n, n, ptr, cols, val)


class DampedJacobi:
    """``u += damping * D^-1 (f - A u)`` with a scalar or block diagonal."""

    def __init__(self, A, damping=JACOBI_DAMPING):
        self.b = A.block_size
        self.damping = damping
        D = A.diagonal()
        try:
            if A.is_block:
                self.dinv = np.stack([block_invert(d) for d in D])
            else:
                self.dinv = np.array([block_invert(d) for d in D])
        except SingularBlock as exc:
            raise SingularPivot("Jacobi smoother met a singular diagonal") from exc

    def solve(self, r):
        if self.b == 1:
            return self.dinv * r
        return np.einsum("kij,kj->ki", self.dinv, r.reshape(-1, self.b)).ravel()

    def apply(self, A, f, u):
        r = sparse.spmv(A, u, f.copy(), alpha=-1.0, beta=1.0)
        u += self.damping * self.solve(r)
        return u

    def nbytes(self):
        return self.dinv.size * sparse.VALUE_BYTES


def ilu0_factor(A):
    return Ilu0(A)


def smooth(S, A, f, u):
    """Apply smoother S once to ``A u = f``; returns the updated u."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != u.shape or f.shape[0] != A.scalar_shape[0]:
        raise DimensionMismatch(f"vector lengths {f.shape}, {u.shape} do not match the matrix {A.scalar_shape}")
    return S.apply(A, f, u)


def as_block_smoother(A_scalar, b, smoother=Ilu0):
    """Block the scalar matrix first, then build the smoother on the blocks.

    The smoother acts on scalar-layout vectors, read blockwise.
    """
    return smoother(sparse.to_block(A_scalar, b))
