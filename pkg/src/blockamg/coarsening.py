"""Smoothed aggregation transfer operators.

The pipeline is strength graph -> greedy aggregation -> tentative
prolongation (indicator, or per-aggregate QR of the near nullspace) ->
one damped Jacobi smoothing step on the filtered matrix.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numba as nb
import numpy as np

from . import sparse
from .errors import NotDivisible, SingularBlock, ZeroDiagonal
from .sparse import SparseMatrix
from .values import block_invert

log = logging.getLogger(__name__)

UNASSIGNED = -1


@dataclass
class CoarseningParams:
    eps_strong: float = 0.08
    omega: float = 2.0 / 3.0
    nullspace: Optional[np.ndarray] = None
    point_block_size: int = 1

    def __post_init__(self):
        if not 0.0 < self.eps_strong < 1.0:
            raise ValueError(f"eps_strong must lie in (0, 1), got {self.eps_strong}")
        if not 0.0 <= self.omega < 2.0:
            raise ValueError(f"omega must lie in [0, 2), got {self.omega}")
        if self.point_block_size < 1:
            raise ValueError("point_block_size must be positive")


class StrengthGraph(NamedTuple):
    """Symmetric node adjacency in CSR form, without self loops."""

    ptr: np.ndarray
    col: np.ndarray

    @property
    def nnodes(self):
        return len(self.ptr) - 1

    def neighbours(self, i):
        return self.col[self.ptr[i]:self.ptr[i + 1]]


@dataclass
class Aggregates:
    id: np.ndarray
    count: int
    block_size: int = 1

    def members(self, j):
        return np.flatnonzero(self.id == j)


class Transfer(NamedTuple):
    P: SparseMatrix
    R: SparseMatrix
    B_coarse: Optional[np.ndarray]


def _node_coupling(A, point_block_size):
    """Condense A to node-level magnitudes.

    Returns (node_row, node_col, weight) for every node pair with a stored
    entry, plus the per-node diagonal weight.
    """
    if A.is_block:
        if point_block_size != 1:
            raise ValueError("block matrices are condensed one block row per node")
        rows = A.row_indices()
        cols = A.col
        mags = np.sqrt(np.einsum("kij,kij->k", A.val, A.val))
        nnodes = A.nrows
    else:
        p = point_block_size
        if A.nrows % p or A.ncols % p:
            raise NotDivisible(f"{A.nrows} rows cannot be grouped into points of {p}")
        rows = A.row_indices() // p
        cols = A.col // p
        mags = np.abs(A.val)
        nnodes = A.nrows // p
    key = rows * max(nnodes, 1) + cols
    ukey, inverse = np.unique(key, return_inverse=True)
    w = np.zeros(len(ukey))
    np.maximum.at(w, inverse, mags)
    nr, nc = ukey // max(nnodes, 1), ukey % max(nnodes, 1)
    diag = np.zeros(nnodes)
    on_diag = nr == nc
    diag[nr[on_diag]] = w[on_diag]
    return nr, nc, w, diag, nnodes


def strength_graph(A, eps_strong=0.08, point_block_size=1):
    """Symmetric strong-coupling graph between nodes of A.

    A node is a group of ``point_block_size`` consecutive scalar rows, or one
    block row of a block matrix. Nodes i != j are strongly coupled when
    ``w_ij**2 > eps_strong**2 * w_ii * w_jj``; the relation is symmetrized by
    union.
    """
    if A.nrows != A.ncols:
        raise ValueError("strength graph needs a square matrix")
    nr, nc, w, diag, nnodes = _node_coupling(A, point_block_size)
    strong = (nr != nc) & (w * w > eps_strong * eps_strong * diag[nr] * diag[nc])
    i, j = nr[strong], nc[strong]
    key = np.unique(np.concatenate([i * nnodes + j, j * nnodes + i]))
    ptr = np.zeros(nnodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(key // max(nnodes, 1), minlength=nnodes), out=ptr[1:])
    return StrengthGraph(ptr, (key % max(nnodes, 1)).astype(np.int64))


@nb.njit(cache=True)
def _aggregate_kernel(ptr, col):
    n = len(ptr) - 1
    agg = np.full(n, -1, dtype=np.int64)
    count = 0
    for i in range(n):
        if agg[i] != -1:
            continue
        free = True
        for j in range(ptr[i], ptr[i + 1]):
            if agg[col[j]] != -1:
                free = False
                break
        if free:
            agg[i] = count
            for j in range(ptr[i], ptr[i + 1]):
                agg[col[j]] = count
            count += 1
    seeded = agg.copy()
    for i in range(n):
        if agg[i] != -1:
            continue
        for j in range(ptr[i], ptr[i + 1]):
            if seeded[col[j]] != -1:
                agg[i] = seeded[col[j]]
                break
    for i in range(n):
        if agg[i] == -1:
            agg[i] = count
            count += 1
    return agg, count


def aggregate(graph, block_size=1):
    """Deterministic greedy plain aggregation of a strength graph.

    Pass 1 scans nodes in index order and seeds an aggregate from every node
    whose neighbours are all still free. Pass 2 attaches each leftover node to
    the aggregate of its lowest-indexed neighbour assigned in pass 1. Whatever
    is still unassigned becomes a singleton.
    """
    ids, count = _aggregate_kernel(graph.ptr, graph.col)
    return Aggregates(ids, int(count), block_size)


def tentative_prolongation(agg, B=None):
    """Piecewise prolongation from aggregates, optionally fitting a nullspace.

    Without ``B`` the result is the aggregate indicator (per component of a
    point block) with unit-norm columns. With ``B`` (n x k), every aggregate
    gets k coarse unknowns from a thin QR of its rows of ``B``; the R factors
    stack into the coarse nullspace. Aggregates with fewer than k scalar rows
    cannot carry the basis and are left out of the coarse space. Nodes with
    id UNASSIGNED get empty rows.

    Returns ``(P_tent, B_coarse)``; ``B_coarse`` is None without ``B``.
    """
    bs = agg.block_size
    nfine = len(agg.id) * bs
    if B is None:
        node = np.arange(nfine) // bs
        comp = np.arange(nfine) % bs
        dof_agg = agg.id[node]
        assigned = dof_agg != UNASSIGNED
        sizes = np.bincount(agg.id[agg.id != UNASSIGNED], minlength=agg.count)
        ptr = np.zeros(nfine + 1, dtype=np.int64)
        np.cumsum(assigned, out=ptr[1:])
        val = 1.0 / np.sqrt(sizes[dof_agg[assigned]])
        P = SparseMatrix(nfine, agg.count * bs, ptr, dof_agg[assigned] * bs + comp[assigned], val)
        return P, None

    B = np.asarray(B, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != nfine:
        raise ValueError(f"nullspace has shape {B.shape}, expected ({nfine}, k)")
    k = B.shape[1]
    order = np.argsort(agg.id, kind="stable")
    bounds = np.searchsorted(agg.id[order], np.arange(agg.count + 1))

    row_blocks, col_start, q_blocks, r_blocks = [], [], [], []
    ncoarse = 0
    dropped = 0
    for j in range(agg.count):
        nodes = order[bounds[j]:bounds[j + 1]]
        rows = (nodes[:, None] * bs + np.arange(bs)).ravel()
        if len(rows) < k:
            dropped += 1
            continue
        q, r = np.linalg.qr(B[rows], mode="reduced")
        sign = np.where(np.diag(r) < 0, -1.0, 1.0)
        row_blocks.append(rows)
        col_start.append(ncoarse)
        q_blocks.append(q * sign)
        r_blocks.append(r * sign[:, None])
        ncoarse += k
    if dropped:
        log.debug("%d aggregates with fewer than %d rows left out of the coarse space", dropped, k)

    nnz_row = np.zeros(nfine, dtype=np.int64)
    cols = np.zeros((nfine, k), dtype=np.int64)
    vals = np.zeros((nfine, k))
    for rows, c0, q in zip(row_blocks, col_start, q_blocks):
        nnz_row[rows] = k
        cols[rows] = c0 + np.arange(k)
        vals[rows] = q
    keep = nnz_row > 0
    ptr = np.zeros(nfine + 1, dtype=np.int64)
    np.cumsum(nnz_row, out=ptr[1:])
    P = SparseMatrix(nfine, ncoarse, ptr, cols[keep].ravel(), vals[keep].ravel())
    B_coarse = np.asfortranarray(np.vstack(r_blocks)) if r_blocks else np.zeros((0, k), order="F")
    return P, B_coarse


def strong_entry_mask(A, graph, point_block_size=1):
    """True for stored entries of A that survive filtering.

    An entry survives when its row and column nodes coincide or are joined
    in the strength graph.
    """
    p = point_block_size
    nrow = A.row_indices() // p
    ncol = A.col // p
    n = graph.nnodes
    gkey = np.repeat(np.arange(n, dtype=np.int64), np.diff(graph.ptr)) * n + graph.col
    key = nrow * n + ncol
    pos = np.searchsorted(gkey, key)
    pos = np.minimum(pos, max(len(gkey) - 1, 0))
    found = (gkey[pos] == key) if len(gkey) else np.zeros(len(key), dtype=bool)
    return (nrow == ncol) | found


def filtered_matrix(A, graph, point_block_size=1):
    """Drop weak couplings and lump them into the diagonal (row sums kept)."""
    keep = strong_entry_mask(A, graph, point_block_size)
    rows = A.row_indices()
    diag_pos = A.diagonal_positions()
    if np.any(diag_pos < 0):
        raise ZeroDiagonal("matrix has rows without a stored diagonal entry")
    weak = ~keep
    val = A.val.copy()
    val[weak] = 0.0
    np.add.at(val, diag_pos[rows[weak]], A.val[weak])
    ptr = np.zeros(A.nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows[keep], minlength=A.nrows), out=ptr[1:])
    return SparseMatrix(A.nrows, A.ncols, ptr, A.col[keep], val[keep])


def smooth_prolongation(A, P_tent, params, graph=None):
    """Return ``(I - omega * D_f^-1 A_f) P_tent``.

    ``A_f`` is A with weak couplings lumped into the diagonal and ``D_f`` its
    (block) diagonal.
    """
    if params.omega == 0.0:
        return P_tent.copy()
    pbs = 1 if A.is_block else params.point_block_size
    if graph is None:
        graph = strength_graph(A, params.eps_strong, pbs)
    Af = filtered_matrix(A, graph, pbs)
    D = Af.diagonal()
    if Af.is_block:
        try:
            Dinv = np.stack([block_invert(d) for d in D]) if len(D) else D.copy()
        except SingularBlock as exc:
            raise ZeroDiagonal("filtered matrix has a singular diagonal block") from exc
    else:
        if np.any(D == 0.0):
            raise ZeroDiagonal(f"filtered matrix has a zero diagonal at row {int(np.flatnonzero(D == 0.0)[0])}")
        Dinv = 1.0 / D
    X = sparse.spgemm(sparse.scale_rows(Af, params.omega * Dinv), P_tent)
    return sparse.add(P_tent, X, 1.0, -1.0)


def drop_isolated(agg, graph):
    """Unassign nodes without strong neighbours and renumber the rest.

    Such nodes (e.g. eliminated Dirichlet rows) are handled by the smoother
    alone; as singletons they would survive on every coarse level.
    """
    ids = agg.id.copy()
    ids[np.diff(graph.ptr) == 0] = UNASSIGNED
    used = np.unique(ids[ids != UNASSIGNED])
    remap = np.full(agg.count, UNASSIGNED, dtype=np.int64)
    remap[used] = np.arange(len(used))
    ids[ids != UNASSIGNED] = remap[ids[ids != UNASSIGNED]]
    return Aggregates(ids, len(used), agg.block_size)


def transfer_operators(A, params):
    """Prolongation, restriction and coarse nullspace for one level.

    Scalar matrices are grouped into points of ``params.point_block_size``
    rows. Nodes without strong neighbours are left out of the coarse space.
    Block matrices are aggregated one block row per node and get a
    block-identity tentative prolongation; they cannot carry a nullspace (use
    :func:`as_scalar_transfer`).
    """
    if A.nrows != A.ncols:
        raise ValueError("transfer operators need a square matrix")
    b = A.block_size
    if A.is_block and params.nullspace is not None:
        raise ValueError("nullspace coarsening runs on scalar matrices; use as_scalar_transfer")
    pbs = 1 if A.is_block else params.point_block_size
    graph = strength_graph(A, params.eps_strong, pbs)
    agg = drop_isolated(aggregate(graph, block_size=b * pbs), graph)
    P_tent, B_coarse = tentative_prolongation(agg, params.nullspace)
    if A.is_block:
        P_tent = sparse.to_block(P_tent, b)
    P = smooth_prolongation(A, P_tent, params, graph)
    return Transfer(P, sparse.transpose(P), B_coarse)


def as_scalar_transfer(A, params):
    """Build transfer operators for a block matrix in scalar space.

    The matrix is unblocked, coarsened by :func:`transfer_operators`, and the
    resulting P and R are blocked again with the block size of A.
    """
    b = A.block_size
    P, R, B_coarse = transfer_operators(sparse.to_scalar(A), params)
    if P.ncols % b:
        raise NotDivisible(f"coarse size {P.ncols} is not a multiple of block size {b}")
    return Transfer(sparse.to_block(P, b), sparse.to_block(R, b), B_coarse)
