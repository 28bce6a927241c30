"""Smoothed aggregation hierarchy setup, V-cycle and memory accounting.

Six pipelines share one setup loop and differ in where each step runs:

=============  ===========  ===========================  ================
pipeline       level A      transfer operators           smoother
=============  ===========  ===========================  ================
scalar         scalar       scalar, points of 3           scalar ILU(0)
block          3x3 blocks   block, one block row / node   block ILU(0)
ns-scalar      scalar       scalar + rigid body modes     scalar ILU(0)
ns-hybrid1     scalar*      scalar + rigid body modes     scalar ILU(0)
ns-hybrid2     scalar*      scalar + rigid body modes     block ILU(0)
ns-block       3x3 blocks   unblock / coarsen / reblock   block ILU(0)
=============  ===========  ===========================  ================

(*) built in scalar arithmetic, stored as 3x3 blocks once the level is done.
"""

import dataclasses
import enum
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from . import sparse
from .coarsening import CoarseningParams, as_scalar_transfer, transfer_operators
from .errors import BadNullspaceShape, DimensionMismatch, NonSquare, NotDivisible
from .relaxation import DampedJacobi, Ilu0, as_block_smoother
from .sparse import SparseMatrix

log = logging.getLogger(__name__)

ELASTICITY_BLOCK = 3
STAGNATION_RATIO = 0.8


class Pipeline(str, enum.Enum):
    SCALAR = "scalar"
    BLOCK = "block"
    NS_SCALAR = "ns-scalar"
    NS_HYBRID1 = "ns-hybrid1"
    NS_HYBRID2 = "ns-hybrid2"
    NS_BLOCK = "ns-block"

    @property
    def label(self):
        return _LABELS[self]

    @property
    def uses_nullspace(self):
        return self.value.startswith("ns-")

    @property
    def needs_blocks(self):
        return self is not Pipeline.SCALAR and self is not Pipeline.NS_SCALAR


_LABELS = {
    Pipeline.SCALAR: "Scalar",
    Pipeline.BLOCK: "Block",
    Pipeline.NS_SCALAR: "NS Scalar",
    Pipeline.NS_HYBRID1: "NS Hybrid1",
    Pipeline.NS_HYBRID2: "NS Hybrid2",
    Pipeline.NS_BLOCK: "NS Block",
}


@dataclass
class AmgParams:
    coarsening: CoarseningParams = field(default_factory=CoarseningParams)
    smoother: str = "ilu0"
    npre: int = 1
    npost: int = 1
    coarse_enough: int = 3000
    block_size: int = ELASTICITY_BLOCK
    verify_galerkin: bool = False

    def __post_init__(self):
        if self.smoother not in ("ilu0", "jacobi"):
            raise ValueError(f"unknown smoother {self.smoother!r}")


@dataclass
class Level:
    A: SparseMatrix
    P: Optional[SparseMatrix] = None
    R: Optional[SparseMatrix] = None
    smoother: object = None

    @property
    def size(self):
        return self.A.scalar_shape[0]


@dataclass
class Hierarchy:
    levels: List[Level]
    coarse_lu: tuple
    pipeline: Pipeline
    params: AmgParams

    @property
    def nlevels(self):
        return len(self.levels)

    def sizes(self):
        return [lvl.size for lvl in self.levels]

    def vcycle(self, f, u=None):
        return vcycle(self, f, u)

    def __call__(self, r):
        return vcycle(self, r)

    def memory_footprint(self):
        return memory_footprint(self)

    def describe(self):
        lines = [f"{self.pipeline.label}: {self.nlevels} level(s)"]
        for i, lvl in enumerate(self.levels):
            lines.append(f"  level {i}: {lvl.size:8d} unknowns, {lvl.A.nnz:10d} stored values (b={lvl.A.block_size})")
        return "\n".join(lines)


def _make_smoother(A, kind):
    return Ilu0(A) if kind == "ilu0" else DampedJacobi(A)


def _check_input(A, B, pipeline, params):
    if A.nrows != A.ncols:
        raise NonSquare(f"system matrix has shape {A.scalar_shape}")
    n = A.scalar_shape[0]
    b = params.block_size
    if (pipeline.needs_blocks or pipeline is Pipeline.SCALAR) and n % b:
        raise NotDivisible(f"{n} unknowns are not a multiple of the block size {b}")
    if pipeline.uses_nullspace:
        if B is None:
            raise BadNullspaceShape(f"pipeline {pipeline.value} needs a near nullspace")
        B = np.asarray(B, dtype=np.float64)
        if B.ndim != 2 or B.shape[0] != n or B.shape[1] < 1:
            raise BadNullspaceShape(f"nullspace has shape {B.shape}, expected ({n}, k)")
        return B
    return None


def setup(A, B=None, pipeline=Pipeline.NS_BLOCK, params=None):
    """Build the multigrid hierarchy for ``A`` with the given pipeline.

    ``A`` is a scalar matrix (blocked input is unblocked first). ``B`` is the
    n x k near nullspace; it is required by the ``ns-*`` pipelines and
    ignored by the others.
    """
    pipeline = Pipeline(pipeline)
    params = params or AmgParams()
    if A.is_block:
        A = sparse.to_scalar(A)
    B = _check_input(A, B, pipeline, params)
    b = params.block_size
    cparams = params.coarsening

    if pipeline is Pipeline.SCALAR:
        cparams = dataclasses.replace(cparams, nullspace=None, point_block_size=b)
    elif pipeline is Pipeline.BLOCK:
        A = sparse.to_block(A, b)
        cparams = dataclasses.replace(cparams, nullspace=None, point_block_size=1)
    else:
        cparams = dataclasses.replace(cparams, nullspace=B, point_block_size=b)
        if pipeline is Pipeline.NS_BLOCK:
            A = sparse.to_block(A, b)

    levels = []
    while A.scalar_shape[0] > params.coarse_enough:
        if pipeline is Pipeline.NS_BLOCK:
            P, R, Bc = as_scalar_transfer(A, cparams)
        else:
            P, R, Bc = transfer_operators(A, cparams)
        nfine, ncoarse = A.scalar_shape[0], P.scalar_shape[1]
        if ncoarse == 0 or ncoarse > STAGNATION_RATIO * nfine:
            log.info("coarsening stagnated at %d -> %d unknowns", nfine, ncoarse)
            break
        Ac = sparse.galerkin(R, A, P)
        if params.verify_galerkin:
            _verify_galerkin(A, P, R, Ac)
        levels.append(_finish_level(A, P, R, pipeline, params))
        A = Ac
        if pipeline.uses_nullspace:
            cparams = dataclasses.replace(cparams, nullspace=Bc, point_block_size=Bc.shape[1])
        log.debug("level %d: %d -> %d unknowns", len(levels) - 1, nfine, ncoarse)

    As = sparse.to_scalar(A) if A.is_block else A
    coarse_lu = scipy.linalg.lu_factor(As.to_dense()) if As.nrows else (np.zeros((0, 0)), np.zeros(0, dtype=np.int32))
    levels.append(_finish_level(A, None, None, pipeline, params, coarsest=True))
    return Hierarchy(levels, coarse_lu, pipeline, params)


def _finish_level(A, P, R, pipeline, params, coarsest=False):
    """Pick the stored representation and the smoother of a finished level."""
    b = params.block_size
    smoother = None
    if pipeline in (Pipeline.NS_HYBRID1, Pipeline.NS_HYBRID2):
        if not coarsest:
            if pipeline is Pipeline.NS_HYBRID1:
                smoother = _make_smoother(A, params.smoother)
            else:
                smoother = as_block_smoother(A, b, Ilu0 if params.smoother == "ilu0" else DampedJacobi)
        A = sparse.to_block(A, b)
        if P is not None:
            P, R = sparse.to_block(P, b), sparse.to_block(R, b)
    elif not coarsest:
        smoother = _make_smoother(A, params.smoother)
    return Level(A, P, R, smoother)


def _verify_galerkin(A, P, R, Ac, rtol=1e-12):
    dense = R.to_dense() @ A.to_dense() @ P.to_dense()
    err = np.linalg.norm(Ac.to_dense() - dense)
    if err > rtol * max(np.linalg.norm(dense), 1.0):
        raise AssertionError(f"Galerkin check failed: relative error {err / np.linalg.norm(dense):.3e}")


def vcycle(H, f, u=None):
    """One V-cycle for ``A u = f``; coarse levels start from zero.

    With ``u`` omitted the cycle starts from zero and acts as a fixed linear
    preconditioner. Returns the updated (new) solution vector.
    """
    f = np.asarray(f, dtype=np.float64)
    n = H.levels[0].size
    if f.shape != (n,):
        raise DimensionMismatch(f"right-hand side has shape {f.shape}, expected ({n},)")
    u = np.zeros(n) if u is None else np.array(u, dtype=np.float64)
    if u.shape != (n,):
        raise DimensionMismatch(f"initial guess has shape {u.shape}, expected ({n},)")

    rhs = [f]
    sol = [u]
    for lvl in H.levels[:-1]:
        fi, ui = rhs[-1], sol[-1]
        for _ in range(H.params.npre):
            lvl.smoother.apply(lvl.A, fi, ui)
        e = sparse.spmv(lvl.A, ui, fi.copy(), alpha=-1.0, beta=1.0)
        fc = sparse.spmv(lvl.R, e)
        rhs.append(fc)
        sol.append(np.zeros_like(fc))

    if len(rhs[-1]):
        sol[-1] = scipy.linalg.lu_solve(H.coarse_lu, rhs[-1])

    for i in range(len(H.levels) - 2, -1, -1):
        lvl = H.levels[i]
        sparse.spmv(lvl.P, sol[i + 1], sol[i], alpha=1.0, beta=1.0)
        for _ in range(H.params.npost):
            lvl.smoother.apply(lvl.A, rhs[i], sol[i])
    return sol[0]


def memory_footprint(H):
    """Bytes held by the preconditioner: every A, P, R, smoother and the dense coarse factor."""
    total = 0
    for lvl in H.levels:
        total += sparse.matrix_bytes(lvl.A)
        if lvl.P is not None:
            total += sparse.matrix_bytes(lvl.P) + sparse.matrix_bytes(lvl.R)
        if lvl.smoother is not None:
            total += lvl.smoother.nbytes()
    n = H.levels[-1].size
    return total + n * n * sparse.VALUE_BYTES
