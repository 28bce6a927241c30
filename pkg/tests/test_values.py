import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from blockamg.errors import SingularBlock
from blockamg.values import (SUPPORTED_BLOCK_SIZES, block_identity, block_invert, block_scalar_norm,
                             block_zero, check_block_size)


def inverse_2x2(m):
    (a, b), (c, d) = m
    return np.array([[d, -b], [-c, a]]) / (a * d - b * c)


@pytest.mark.parametrize("b", SUPPORTED_BLOCK_SIZES)
def test_identity_inverts_to_identity(b):
    assert np.array_equal(np.atleast_2d(block_invert(block_identity(b))), np.eye(b))


def test_diagonal_inverse():
    assert np.array_equal(block_invert(np.array([[2.0, 0.0], [0.0, 4.0]])), [[0.5, 0.0], [0.0, 0.25]])


def test_example_block_against_closed_form():
    M = np.array([[0.71, 0.65], [0.54, 0.37]])
    N = block_invert(M)
    np.testing.assert_allclose(N, inverse_2x2(M), rtol=1e-13)
    assert np.abs(M @ N - np.eye(2)).max() <= 1e-12


def test_singular_block_raises():
    with pytest.raises(SingularBlock):
        block_invert(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularBlock):
        block_invert(np.zeros((3, 3)))


def test_scalar_inverse_is_native():
    assert block_invert(4.0) == 1.0 / 4.0
    assert block_invert(np.float64(3.0)) == 1.0 / 3.0


def test_norms():
    assert block_scalar_norm(block_zero(3)) == 0.0
    assert block_scalar_norm(np.array([[3.0, 4.0], [0.0, 0.0]])) == 5.0
    assert block_scalar_norm(-2.5) == 2.5
    M = np.random.default_rng(1).standard_normal((3, 3))
    assert block_scalar_norm(M) == pytest.approx(np.sqrt((M ** 2).sum()), rel=1e-15)


@pytest.mark.parametrize("b", [0, 4, 5, 7])
def test_unsupported_block_size(b):
    with pytest.raises(ValueError):
        check_block_size(b)


blocks3 = arrays(np.float64, (3, 3), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False))


@given(blocks3, blocks3)
def test_norm_triangle_inequality(M, N):
    assert block_scalar_norm(M + N) <= block_scalar_norm(M) + block_scalar_norm(N) + 1e-12


@settings(max_examples=200)
@given(st.sampled_from([2, 3, 6]), st.integers(0, 2 ** 32 - 1))
def test_double_inverse(b, seed):
    rng = np.random.default_rng(seed)
    # well conditioned: orthogonal factors with singular values in [1, 10]
    U, _ = np.linalg.qr(rng.standard_normal((b, b)))
    V, _ = np.linalg.qr(rng.standard_normal((b, b)))
    M = U @ np.diag(rng.uniform(1, 10, b)) @ V
    N = block_invert(M)
    assert np.abs(M @ N - np.eye(b)).max() <= 1e-12 * np.linalg.cond(M)
    assert np.linalg.norm(block_invert(N) - M) <= 1e-10 * np.linalg.norm(M)
