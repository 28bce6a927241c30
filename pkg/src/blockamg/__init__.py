"""Smoothed aggregation AMG with block arithmetics for 3D elasticity."""

from .amg import AmgParams, Hierarchy, Pipeline, memory_footprint, setup, vcycle
from .coarsening import CoarseningParams
from .elasticity import generate_hex_elasticity, rigid_body_modes
from .krylov import SolveReport, cg_solve
from .sparse import SparseMatrix, matrix_bytes, spgemm, spmv, to_block, to_scalar, transpose

__version__ = "0.1.0"

__all__ = [
    "AmgParams", "CoarseningParams", "Hierarchy", "Pipeline", "SolveReport", "SparseMatrix",
    "cg_solve", "generate_hex_elasticity", "matrix_bytes", "memory_footprint", "rigid_body_modes",
    "setup", "spgemm", "spmv", "to_block", "to_scalar", "transpose", "vcycle",
]
