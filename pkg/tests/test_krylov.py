import numpy as np
import pytest

from blockamg.amg import AmgParams, setup
from blockamg.errors import BreakdownNonSPD, DimensionMismatch
from blockamg.krylov import cg_solve, relative_residual
from blockamg.sparse import SparseMatrix

from conftest import laplacian_2d


def true_residual(A, f, u):
    Ad = A.to_dense()
    return np.linalg.norm(f - Ad @ u) / np.linalg.norm(f)


def test_identity_one_iteration(rng):
    f = rng.standard_normal(7)
    u, rep = cg_solve(SparseMatrix.identity(7), f)
    assert rep.iterations == 1 and rep.converged
    np.testing.assert_array_equal(u, f)


def test_exact_jacobi_preconditioner(rng):
    d = np.arange(1.0, 11.0)
    A = SparseMatrix.from_dense(np.diag(d))
    f = rng.standard_normal(10)
    u, rep = cg_solve(A, f, lambda r: r / d)
    assert rep.iterations == 1
    np.testing.assert_allclose(u, f / d, rtol=1e-14)


def test_amg_preconditioned_laplacian():
    A = laplacian_2d(32)
    H = setup(A, pipeline="scalar", params=AmgParams(block_size=1, coarse_enough=100))
    assert H.nlevels >= 2
    f = np.ones(A.nrows)
    u, rep = cg_solve(A, f, H, tol=1e-8)
    assert rep.converged
    assert true_residual(A, f, u) <= 1e-8
    assert abs(rep.relative_residual - true_residual(A, f, u)) <= 1e-10


@pytest.mark.parametrize("n", [2, 5, 12, 20])
def test_unpreconditioned_bounded_by_n(n, rng):
    G = rng.standard_normal((n, n))
    A = SparseMatrix.from_dense(G @ G.T + n * np.eye(n))
    f = rng.standard_normal(n)
    u, rep = cg_solve(A, f, tol=1e-8)
    assert rep.converged and rep.iterations <= n
    assert abs(rep.relative_residual - true_residual(A, f, u)) <= 1e-10


def test_deterministic_iterations():
    A = laplacian_2d(16)
    H = setup(A, pipeline="scalar", params=AmgParams(block_size=1, coarse_enough=50))
    f = np.linspace(-1, 1, A.nrows)
    a, b = cg_solve(A, f, H), cg_solve(A, f, H)
    assert a[1].iterations == b[1].iterations and np.array_equal(a[0], b[0])


def test_max_iterations_flags_unconverged():
    A = laplacian_2d(16)
    u, rep = cg_solve(A, np.ones(A.nrows), max_iterations=3)
    assert not rep.converged and rep.iterations == 3
    assert rep.relative_residual == pytest.approx(relative_residual(A, np.ones(A.nrows), u), abs=1e-15)


def test_zero_rhs():
    u, rep = cg_solve(SparseMatrix.identity(3), np.zeros(3))
    assert rep.converged and rep.iterations == 0 and not u.any()


def test_indefinite_breakdown():
    A = SparseMatrix.from_dense(np.diag([1.0, -1.0]))
    with pytest.raises(BreakdownNonSPD):
        cg_solve(A, np.array([1.0, 1.0]))


def test_bad_inputs():
    with pytest.raises(DimensionMismatch):
        cg_solve(SparseMatrix.identity(3), np.ones(4))
    with pytest.raises(ValueError):
        cg_solve(SparseMatrix.identity(3), np.ones(3), tol=0)
