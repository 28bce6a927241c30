"""Six-solver benchmark protocol and report rendering."""

import csv
import io as _io
import json
import logging
import statistics
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import io, sparse
from .amg import AmgParams, Pipeline, memory_footprint, setup
from .coarsening import CoarseningParams
from .elasticity import generate_hex_elasticity, rigid_body_modes
from .errors import AmgError, ShapeMismatch
from .krylov import cg_solve, relative_residual

log = logging.getLogger(__name__)

ALL_SOLVERS = tuple(p.value for p in Pipeline)
MIB = 2 ** 20


@dataclass
class BenchConfig:
    matrix: Optional[str] = None
    grid: Optional[Tuple[int, int, int]] = None
    young: float = 1.0
    poisson: float = 0.3
    clamp: bool = True
    coords: Optional[str] = None
    rhs: str = "ones"
    solvers: List[str] = field(default_factory=lambda: list(ALL_SOLVERS))
    tol: float = 1e-8
    max_iterations: int = 1000
    eps_strong: float = 0.08
    omega: float = 2.0 / 3.0
    coarse_enough: int = 3000
    repeat: int = 3

    def __post_init__(self):
        if not self.solvers:
            raise ValueError("select at least one solver")
        self.solvers = [Pipeline(s).value for s in self.solvers]
        if (self.matrix is None) == (self.grid is None):
            raise ValueError("give exactly one of a matrix path or a generator grid")
        if self.repeat < 1:
            raise ValueError("repeat count must be positive")

    def amg_params(self):
        return AmgParams(
            coarsening=CoarseningParams(eps_strong=self.eps_strong, omega=self.omega),
            coarse_enough=self.coarse_enough,
        )


@dataclass
class Problem:
    A: sparse.SparseMatrix
    coords: Optional[np.ndarray]
    rhs: np.ndarray
    source: str


@dataclass
class BenchRow:
    solver: str
    setup_seconds: float = float("nan")
    solve_seconds: float = float("nan")
    iterations: int = 0
    relative_residual: float = float("nan")
    converged: bool = False
    memory_bytes: int = 0
    levels: int = 0
    error: Optional[str] = None

    @property
    def label(self):
        return Pipeline(self.solver).label

    def record(self):
        """Rounded values shared by every output format."""
        if self.error:
            return {"solver": self.label, "setup_s": None, "solve_s": None, "total_s": None,
                    "iterations": None, "memory_mib": None, "memory_bytes": None,
                    "relative_residual": None, "levels": None, "converged": False, "error": self.error}
        return {
            "solver": self.label,
            "setup_s": round(self.setup_seconds, 3),
            "solve_s": round(self.solve_seconds, 3),
            "total_s": round(self.setup_seconds + self.solve_seconds, 3),
            "iterations": self.iterations,
            "memory_mib": round(self.memory_bytes / MIB, 2),
            "memory_bytes": self.memory_bytes,
            "relative_residual": float(f"{self.relative_residual:.3e}"),
            "levels": self.levels,
            "converged": self.converged,
            "error": self.error,
        }


def load_problem(config):
    """Read or generate the system, coordinates and right-hand side."""
    if config.grid is not None:
        nx, ny, nz = config.grid
        bundle = generate_hex_elasticity(nx, ny, nz, config.young, config.poisson, config.clamp)
        A, coords = bundle.A, bundle.coords
        body = bundle.rhs
        source = f"generated {nx}x{ny}x{nz} hex grid (E={config.young}, nu={config.poisson}, clamp={config.clamp})"
    else:
        A = io.read_matrix_market(config.matrix)
        coords = io.read_coordinates(config.coords) if config.coords else None
        body = None
        source = config.matrix
    n = A.nrows
    if A.nrows != A.ncols:
        raise ShapeMismatch(f"matrix must be square, got {A.nrows}x{A.ncols}")
    if coords is not None and 3 * len(coords) != n:
        raise ShapeMismatch(f"{len(coords)} nodes give {3 * len(coords)} DOFs but the matrix has {n} rows")

    if config.rhs == "ones":
        rhs = np.ones(n)
    elif config.rhs == "body-force":
        if body is None:
            raise ShapeMismatch("a body-force right-hand side is only available for generated problems")
        rhs = body
    else:
        rhs = io.read_vector(config.rhs)
        if rhs.shape != (n,):
            raise ShapeMismatch(f"right-hand side has {len(rhs)} entries, matrix has {n} rows")
    return Problem(A, coords, rhs, source)


def _validate(problem, solver, params):
    n = problem.A.nrows
    pipeline = Pipeline(solver)
    if n % params.block_size:
        raise ShapeMismatch(
            f"{pipeline.label} needs the unknown count to be a multiple of {params.block_size}, got {n}"
        )
    if pipeline.uses_nullspace and problem.coords is None:
        raise ShapeMismatch(f"{pipeline.label} needs node coordinates (--coords)")


def run_one(problem, solver, config, B=None):
    return solve_one(problem, solver, config, B)[0]


def solve_one(problem, solver, config, B=None):
    """Benchmark one solver; returns ``(row, solution or None)``."""
    params = config.amg_params()
    row = BenchRow(solver)
    u = None
    try:
        _validate(problem, solver, params)
        setups, solves = [], []
        for _ in range(config.repeat):
            t0 = time.perf_counter()
            H = setup(problem.A, B, solver, params)
            setups.append(time.perf_counter() - t0)
            u, report = cg_solve(problem.A, problem.rhs, H, config.tol, config.max_iterations)
            solves.append(report.solve_seconds)
        row.setup_seconds = statistics.median(setups)
        row.solve_seconds = statistics.median(solves)
        row.iterations = report.iterations
        row.relative_residual = relative_residual(problem.A, problem.rhs, u)
        row.converged = report.converged
        row.memory_bytes = memory_footprint(H)
        row.levels = H.nlevels
    except AmgError as exc:
        log.warning("%s failed: %s", solver, exc)
        row.error = f"{type(exc).__name__}: {exc}"
    return row, u


def run_benchmark(config, problem=None):
    """Run every selected solver on one problem; returns one row per solver.

    A solver that raises is recorded as a failed row and the rest still run.
    """
    problem = problem or load_problem(config)
    B = rigid_body_modes(problem.coords) if problem.coords is not None else None
    return [run_one(problem, s, config, B) for s in config.solvers]


def metadata(config, problem):
    return {
        "problem": problem.source,
        "unknowns": problem.A.nrows,
        "nonzeros": problem.A.nnz,
        "rhs": config.rhs,
        "tol": config.tol,
        "max_iterations": config.max_iterations,
        "eps_strong": config.eps_strong,
        "omega": config.omega,
        "coarse_enough": config.coarse_enough,
        "smoother": "ilu0 (1 pre, 1 post)",
        "repeat": config.repeat,
    }


_COLUMNS = [
    ("Solver", "solver"), ("Setup (s)", "setup_s"), ("Solve (s)", "solve_s"), ("Total (s)", "total_s"),
    ("Iterations", "iterations"), ("Memory (M)", "memory_mib"), ("Rel. residual", "relative_residual"),
    ("Levels", "levels"),
]


def _fmt(key, value):
    if value is None:
        return ""
    if key in ("setup_s", "solve_s", "total_s"):
        return f"{value:.3f}"
    if key == "memory_mib":
        return f"{value:.2f}"
    if key == "relative_residual":
        return f"{value:.3e}"
    return str(value)


def format_report(rows, fmt="md", meta=None):
    records = [r.record() for r in rows]
    if fmt == "json":
        return json.dumps({"metadata": meta or {}, "rows": records}, indent=2)
    if fmt == "csv":
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        keys = [k for _, k in _COLUMNS] + ["memory_bytes", "converged", "error"]
        writer.writerow(keys)
        for rec in records:
            writer.writerow([_fmt(k, rec[k]) for k in keys])
        return buf.getvalue()
    if fmt != "md":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"<!-- {key}: {value} -->")
    lines.append("| " + " | ".join(h for h, _ in _COLUMNS) + " |")
    lines.append("|" + "|".join("---" for _ in _COLUMNS) + "|")
    for rec in records:
        if rec["error"]:
            cells = [rec["solver"]] + ["failed"] + [""] * (len(_COLUMNS) - 2)
            cells[-1] = rec["error"]
        else:
            cells = [_fmt(k, rec[k]) for _, k in _COLUMNS]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def block_structure(A):
    """Largest b in (6, 3, 2) such that A is made of full b x b tiles.

    Every diagonal tile must be fully stored and zero-filling the stored
    tiles must add nothing. Returns ``(b, number of b x b blocks, fill ratio)``
    with b = 1 when no nontrivial blocking fits.
    """
    n = A.nrows
    rows = A.row_indices()
    for b in (6, 3, 2):
        if n % b or A.ncols % b or n == 0:
            continue
        in_diag = rows // b == A.col // b
        per_tile = np.bincount(rows[in_diag] // b, minlength=n // b)
        if not np.all(per_tile == b * b):
            continue
        Ab = sparse.to_block(A, b)
        if Ab.nnz * b * b == A.nnz:
            return b, Ab.nnz, 1.0
    return 1, A.nnz, 1.0


def tile_fill(A, b):
    """Share of stored scalars among all entries of the b x b tiles they touch."""
    if A.nnz == 0:
        return 1.0
    return A.nnz / (sparse.to_block(A, b).nnz * b * b)


def info(A):
    """Structure report for a scalar matrix."""
    S = A.to_scipy()
    asym = abs(S - S.T).max() if A.nnz else 0.0
    scale = abs(S).max() if A.nnz else 1.0
    b, nblocks, fill = block_structure(A)
    report = {
        "rows": A.nrows,
        "cols": A.ncols,
        "nnz": A.nnz,
        "symmetric": bool(asym <= 1e-12 * scale),
        "max_asymmetry": float(asym),
        "block_size": b,
        "blocks": nblocks,
        "block_fill": round(fill, 4),
        "tile_fill": {c: round(tile_fill(A, c), 4) for c in (2, 3, 6) if A.nrows % c == 0 and A.ncols % c == 0},
    }
    return report
