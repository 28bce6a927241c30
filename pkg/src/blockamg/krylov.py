"""Preconditioned conjugate gradients."""

import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import sparse
from .errors import BreakdownNonSPD, DimensionMismatch


@dataclass
class SolveReport:
    iterations: int
    relative_residual: float
    converged: bool
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0
    preconditioner_bytes: int = 0
    pipeline: Optional[str] = None

    @property
    def total_seconds(self):
        return self.setup_seconds + self.solve_seconds

    def as_dict(self):
        return asdict(self)


def relative_residual(A, f, u):
    norm_f = np.linalg.norm(f)
    r = sparse.spmv(A, u, np.array(f, dtype=np.float64), alpha=-1.0, beta=1.0)
    return float(np.linalg.norm(r) / norm_f) if norm_f > 0 else float(np.linalg.norm(r))


def cg_solve(A, f, M=None, tol=1e-8, max_iterations=1000):
    """Solve ``A u = f`` by preconditioned CG from a zero initial guess.

    ``M`` maps a residual to a correction (e.g. a Hierarchy); None means no
    preconditioning. Iteration stops once the recurrence residual satisfies
    ``||r|| <= tol * ||f||`` and the true residual confirms it. The reported
    residual is recomputed from scratch. Running out of iterations is not an
    error: the last iterate is returned with ``converged=False``.
    """
    f = np.asarray(f, dtype=np.float64)
    n = A.scalar_shape[0]
    if f.shape != (n,):
        raise DimensionMismatch(f"right-hand side has shape {f.shape}, expected ({n},)")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    precond = M if M is not None else (lambda r: r.copy())

    t0 = time.perf_counter()
    u = np.zeros(n)
    norm_f = np.linalg.norm(f)
    if norm_f == 0.0:
        return u, SolveReport(0, 0.0, True, solve_seconds=time.perf_counter() - t0)

    r = f.copy()
    rho_old = 1.0
    p = None
    it = 0
    converged = False
    while it < max_iterations:
        z = precond(r)
        rho = float(r @ z)
        p = z.copy() if p is None else z + (rho / rho_old) * p
        q = sparse.spmv(A, p)
        pq = float(p @ q)
        if not pq > 0.0:
            raise BreakdownNonSPD(f"p^T A p = {pq:.3e} at iteration {it + 1}")
        alpha = rho / pq
        u += alpha * p
        r -= alpha * q
        rho_old = rho
        it += 1
        if np.linalg.norm(r) <= tol * norm_f:
            # guard against recurrence drift: only stop on a true residual
            r_true = sparse.spmv(A, u, f.copy(), alpha=-1.0, beta=1.0)
            if np.linalg.norm(r_true) <= tol * norm_f:
                converged = True
                break
            r = r_true

    rel = relative_residual(A, f, u)
    return u, SolveReport(it, rel, converged, solve_seconds=time.perf_counter() - t0)
