"""CSR matrices over scalar or block values, and the kernels built on them.

Dimensions (``nrows``, ``ncols``) are counted in value units: a 3x3-block
matrix of scalar size 30x30 has ``nrows == ncols == 10``. Vectors are always
passed in scalar layout.
"""

from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import DimensionMismatch, NotDivisible
from .values import check_block_size

INDEX_BYTES = 8
VALUE_BYTES = 8


@dataclass
class SparseMatrix:
    nrows: int
    ncols: int
    ptr: np.ndarray
    col: np.ndarray
    val: np.ndarray

    def __post_init__(self):
        self.nrows = int(self.nrows)
        self.ncols = int(self.ncols)
        self.ptr = np.ascontiguousarray(self.ptr, dtype=np.int64)
        self.col = np.ascontiguousarray(self.col, dtype=np.int64)
        self.val = np.ascontiguousarray(self.val, dtype=np.float64)
        if self.val.ndim not in (1, 3):
            raise ValueError("values must be (nnz,) scalars or (nnz, b, b) blocks")
        if self.val.ndim == 3:
            if self.val.shape[1] != self.val.shape[2]:
                raise ValueError("block values must be square")
            check_block_size(self.val.shape[1])

    @property
    def block_size(self):
        return 1 if self.val.ndim == 1 else self.val.shape[1]

    @property
    def is_block(self):
        return self.val.ndim == 3

    @property
    def nnz(self):
        return len(self.col)

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @property
    def scalar_shape(self):
        b = self.block_size
        return (self.nrows * b, self.ncols * b)

    @property
    def blocks(self):
        """Values as an ``(nnz, b, b)`` array (a view for scalar matrices)."""
        return self.val.reshape(-1, 1, 1) if self.val.ndim == 1 else self.val

    def row_indices(self):
        return np.repeat(np.arange(self.nrows, dtype=np.int64), np.diff(self.ptr))

    def check(self):
        """Validate the CSR invariants; raises ValueError on the first violation."""
        ptr, col = self.ptr, self.col
        if len(ptr) != self.nrows + 1 or ptr[0] != 0 or ptr[-1] != len(col):
            raise ValueError("inconsistent row pointer")
        if len(self.val) != len(col):
            raise ValueError("value and column arrays differ in length")
        if np.any(np.diff(ptr) < 0):
            raise ValueError("row pointer is decreasing")
        if len(col):
            if col.min() < 0 or col.max() >= self.ncols:
                raise ValueError("column index out of range")
            rows = self.row_indices()
            same_row = rows[1:] == rows[:-1]
            if np.any(same_row & (col[1:] <= col[:-1])):
                raise ValueError("columns not strictly increasing within a row")
        return self

    def copy(self):
        return SparseMatrix(self.nrows, self.ncols, self.ptr.copy(), self.col.copy(), self.val.copy())

    def diagonal_positions(self):
        """Index into ``col``/``val`` of every diagonal entry, -1 where absent."""
        return _diagonal_positions(self.ptr, self.col, self.nrows)

    def diagonal(self):
        pos = self.diagonal_positions()
        b = self.block_size
        out = np.zeros((self.nrows, b, b)) if self.is_block else np.zeros(self.nrows)
        has = pos >= 0
        out[has] = self.val[pos[has]]
        return out

    def to_dense(self):
        """Dense scalar expansion (blocks are written out entrywise)."""
        m, n = self.scalar_shape
        b = self.block_size
        out = np.zeros((m, n))
        rows = self.row_indices()
        if b == 1:
            np.add.at(out, (rows, self.col), self.val)
        else:
            for r in range(b):
                for c in range(b):
                    np.add.at(out, (rows * b + r, self.col * b + c), self.val[:, r, c])
        return out

    def to_scipy(self):
        import scipy.sparse as sp

        A = self if not self.is_block else to_scalar(self)
        return sp.csr_matrix((A.val, A.col, A.ptr), shape=A.shape)

    @classmethod
    def from_scipy(cls, A):
        A = A.tocsr(copy=True)
        A.sum_duplicates()
        A.sort_indices()
        return cls(A.shape[0], A.shape[1], A.indptr, A.indices, A.data)

    @classmethod
    def from_dense(cls, dense, block_size=1, keep_zeros=False):
        """Build a CSR matrix from a dense array.

        With ``block_size > 1`` the result is blocked via :func:`to_block`.
        """
        dense = np.asarray(dense, dtype=np.float64)
        mask = np.ones(dense.shape, dtype=bool) if keep_zeros else dense != 0
        rows, cols = np.nonzero(mask)
        ptr = np.zeros(dense.shape[0] + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=dense.shape[0]), out=ptr[1:])
        A = cls(dense.shape[0], dense.shape[1], ptr, cols, dense[rows, cols])
        return A if block_size == 1 else to_block(A, block_size)

    @classmethod
    def identity(cls, n, block_size=1):
        ptr = np.arange(n + 1)
        col = np.arange(n)
        if block_size == 1:
            return cls(n, n, ptr, col, np.ones(n))
        return cls(n, n, ptr, col, np.broadcast_to(np.eye(block_size), (n, block_size, block_size)))

    def __matmul__(self, x):
        if isinstance(x, SparseMatrix):
            return spgemm(self, x)
        return spmv(self, x)


def _as_blocks(val):
    return val.reshape(-1, 1, 1) if val.ndim == 1 else val


def _from_blocks(nrows, ncols, ptr, col, val3):
    val = val3.reshape(-1) if val3.shape[1] == 1 else val3
    return SparseMatrix(nrows, ncols, ptr, col, val)


@nb.njit(cache=True)
def _diagonal_positions(ptr, col, n):
    pos = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        for j in range(ptr[i], ptr[i + 1]):
            if col[j] == i:
                pos[i] = j
                break
    return pos


@nb.njit(cache=True)
def _spmv_kernel(ptr, col, val, x, y, alpha, beta):
    n = len(ptr) - 1
    b = val.shape[1]
    acc = np.empty(b)
    for i in range(n):
        for r in range(b):
            acc[r] = 0.0
        for j in range(ptr[i], ptr[i + 1]):
            c = col[j]
            for r in range(b):
                s = acc[r]
                for k in range(b):
                    s += val[j, r, k] * x[c, k]
                acc[r] = s
        if beta == 0.0:
            for r in range(b):
                y[i, r] = alpha * acc[r]
        else:
            for r in range(b):
                y[i, r] = alpha * acc[r] + beta * y[i, r]


def spmv(A, x, y=None, alpha=1.0, beta=0.0):
    """Return ``alpha * A @ x + beta * y`` (``y`` is updated in place if given)."""
    m, n = A.scalar_shape
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (n,):
        raise DimensionMismatch(f"x has shape {x.shape}, expected ({n},)")
    if y is None:
        y = np.zeros(m)
        beta = 0.0
    elif y.shape != (m,):
        raise DimensionMismatch(f"y has shape {y.shape}, expected ({m},)")
    b = A.block_size
    _spmv_kernel(A.ptr, A.col, A.blocks, x.reshape(-1, b), y.reshape(-1, b), float(alpha), float(beta))
    return y


def transpose(A):
    """Transpose with sorted rows; block values are transposed too."""
    rows = A.row_indices()
    order = np.argsort(A.col, kind="stable")
    ptr = np.zeros(A.ncols + 1, dtype=np.int64)
    np.cumsum(np.bincount(A.col, minlength=A.ncols), out=ptr[1:])
    val = A.val[order]
    if A.is_block:
        val = np.ascontiguousarray(val.transpose(0, 2, 1))
    return SparseMatrix(A.ncols, A.nrows, ptr, rows[order], val)


@nb.njit(cache=True)
def _spgemm_symbolic(aptr, acol, bptr, bcol, ncols):
    n = len(aptr) - 1
    marker = np.full(ncols, -1, dtype=np.int64)
    cptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        cnt = 0
        for ja in range(aptr[i], aptr[i + 1]):
            k = acol[ja]
            for jb in range(bptr[k], bptr[k + 1]):
                c = bcol[jb]
                if marker[c] != i:
                    marker[c] = i
                    cnt += 1
        cptr[i + 1] = cptr[i] + cnt
    return cptr


@nb.njit(cache=True)
def _spgemm_numeric(aptr, acol, aval, bptr, bcol, bval, cptr, ncols):
    n = len(aptr) - 1
    b = aval.shape[1]
    nnz = cptr[n]
    ccol = np.empty(nnz, dtype=np.int64)
    cval = np.zeros((nnz, b, b))
    marker = np.full(ncols, -1, dtype=np.int64)
    for i in range(n):
        head = cptr[i]
        end = head
        for ja in range(aptr[i], aptr[i + 1]):
            k = acol[ja]
            for jb in range(bptr[k], bptr[k + 1]):
                c = bcol[jb]
                pos = marker[c]
                if pos < head:
                    pos = end
                    marker[c] = pos
                    ccol[pos] = c
                    end += 1
                for r in range(b):
                    for s in range(b):
                        acc = cval[pos, r, s]
                        for t in range(b):
                            acc += aval[ja, r, t] * bval[jb, t, s]
                        cval[pos, r, s] = acc
        order = np.argsort(ccol[head:end], kind="mergesort")
        ccol[head:end] = ccol[head:end][order]
        cval[head:end] = cval[head:end][order]
    return ccol, cval


def spgemm(A, B):
    """Sparse product ``A @ B``; numerically zero results stay in the pattern."""
    if A.ncols != B.nrows or A.block_size != B.block_size:
        raise DimensionMismatch(
            f"cannot multiply {A.scalar_shape} (b={A.block_size}) by {B.scalar_shape} (b={B.block_size})"
        )
    cptr = _spgemm_symbolic(A.ptr, A.col, B.ptr, B.col, B.ncols)
    ccol, cval = _spgemm_numeric(A.ptr, A.col, A.blocks, B.ptr, B.col, B.blocks, cptr, B.ncols)
    return _from_blocks(A.nrows, B.ncols, cptr, ccol, cval)


def galerkin(R, A, P):
    """Coarse operator ``(R @ A) @ P``, evaluated left to right."""
    return spgemm(spgemm(R, A), P)


def add(A, B, alpha=1.0, beta=1.0):
    """``alpha * A + beta * B`` over the union of both patterns."""
    if A.shape != B.shape or A.block_size != B.block_size:
        raise DimensionMismatch("matrix sum needs equal shapes and block sizes")
    rows = np.concatenate([A.row_indices(), B.row_indices()])
    cols = np.concatenate([A.col, B.col])
    vals = np.concatenate([alpha * A.val, beta * B.val])
    key = rows * max(A.ncols, 1) + cols
    order = np.argsort(key, kind="stable")
    key = key[order]
    first = np.flatnonzero(np.r_[True, key[1:] != key[:-1]]) if len(key) else np.zeros(0, dtype=np.int64)
    val = np.add.reduceat(vals[order], first, axis=0) if len(first) else vals[:0]
    urows = rows[order][first]
    ptr = np.zeros(A.nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(urows, minlength=A.nrows), out=ptr[1:])
    return SparseMatrix(A.nrows, A.ncols, ptr, cols[order][first], val)


def scale_rows(A, d):
    """Left-multiply row i by ``d[i]`` (a scalar or a b x b block)."""
    rows = A.row_indices()
    if A.is_block:
        val = np.einsum("kij,kjl->kil", d[rows], A.val)
    else:
        val = d[rows] * A.val
    return SparseMatrix(A.nrows, A.ncols, A.ptr.copy(), A.col.copy(), val)


def to_block(A, b):
    """Group a scalar matrix into b x b tiles.

    Every tile holding at least one stored entry becomes a block; missing
    entries inside an emitted block are zero-filled.
    """
    if A.is_block:
        raise ValueError("to_block expects a scalar matrix")
    check_block_size(b)
    if A.nrows % b or A.ncols % b:
        raise NotDivisible(f"matrix of shape {A.shape} cannot be split into {b}x{b} blocks")
    if b == 1:
        return A.copy()
    nbr, nbc = A.nrows // b, A.ncols // b
    rows = A.row_indices()
    brow, bcol = rows // b, A.col // b
    key = brow * max(nbc, 1) + bcol
    ukey, inverse = np.unique(key, return_inverse=True)
    val = np.zeros((len(ukey), b, b))
    val[inverse, rows % b, A.col % b] = A.val
    urow = ukey // max(nbc, 1)
    ptr = np.zeros(nbr + 1, dtype=np.int64)
    np.cumsum(np.bincount(urow, minlength=nbr), out=ptr[1:])
    return SparseMatrix(nbr, nbc, ptr, ukey % max(nbc, 1), val)


def to_scalar(A):
    """Expand every block into its b*b scalar entries, explicit zeros included."""
    if not A.is_block:
        return A.copy()
    b = A.block_size
    brows = A.row_indices()
    nnzb = A.nnz
    # entry order: scalar row (block row, r), then block k, then c
    k = np.arange(nnzb)
    kk, rr, cc = np.meshgrid(k, np.arange(b), np.arange(b), indexing="ij")
    kk, rr, cc = kk.ravel(), rr.ravel(), cc.ravel()
    srow = brows[kk] * b + rr
    order = np.lexsort((cc, kk, srow))
    kk, rr, cc, srow = kk[order], rr[order], cc[order], srow[order]
    ptr = np.zeros(A.nrows * b + 1, dtype=np.int64)
    np.cumsum(np.bincount(srow, minlength=A.nrows * b), out=ptr[1:])
    return SparseMatrix(A.nrows * b, A.ncols * b, ptr, A.col[kk] * b + cc, A.val[kk, rr, cc])


def matrix_bytes(A):
    """Storage of ptr, col and val with 8-byte indices and doubles."""
    b = A.block_size
    return (A.nrows + 1) * INDEX_BYTES + A.nnz * INDEX_BYTES + A.nnz * b * b * VALUE_BYTES


def frobenius(A):
    return float(np.sqrt(np.sum(np.square(A.val))))
