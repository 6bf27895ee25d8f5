import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from winosparse import tensor_core as tc


def naive_matmul(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestMatmul:
    def test_identity(self):
        m = np.array([[1.5, -2.0], [0.25, 7.0]])
        assert np.array_equal(tc.matmul(np.eye(2), m), m)

    def test_hand_case(self):
        out = tc.matmul([[1, 2], [3, 4]], [[0], [1]])
        assert np.array_equal(out, [[2.0], [4.0]])

    def test_against_triple_loop(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((4, 3))
        b = rng.standard_normal((3, 5))
        assert np.max(np.abs(tc.matmul(a, b) - naive_matmul(a, b))) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(tc.DimensionError):
            tc.matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_rank_mismatch(self):
        with pytest.raises(tc.DimensionError):
            tc.matmul(np.zeros(3), np.zeros((3, 2)))

    def test_associativity(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = rng.standard_normal((3, 4))
            b = rng.standard_normal((4, 2))
            c = rng.standard_normal((2, 5))
            lhs = tc.matmul(a, tc.matmul(b, c))
            rhs = tc.matmul(tc.matmul(a, b), c)
            assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_transpose_involution_exact():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((5, 3))
    assert np.array_equal(tc.transpose(tc.transpose(a)), a)


class TestHadamard:
    def test_zeros(self):
        a = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(tc.hadamard(a, np.zeros((2, 3))), np.zeros((2, 3)))

    def test_ones(self):
        a = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(tc.hadamard(a, np.ones((2, 3))), a)

    def test_hand_case(self):
        out = tc.hadamard([[1, 2], [3, 4]], [[2, 0], [0, 2]])
        assert np.array_equal(out, [[2.0, 0.0], [0.0, 8.0]])

    def test_commutative_exact(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((3, 3))
        b = rng.standard_normal((3, 3))
        assert np.array_equal(tc.hadamard(a, b), tc.hadamard(b, a))

    def test_shape_mismatch(self):
        with pytest.raises(tc.DimensionError):
            tc.hadamard(np.zeros((2, 2)), np.zeros((2, 3)))


class TestMaskedSqNorm:
    def test_zero_mask(self):
        assert tc.masked_sq_norm(np.array([1.0, 2.0, 3.0]), np.zeros(3)) == 0.0

    def test_hand_case(self):
        assert tc.masked_sq_norm(np.array([3.0, 4.0]), np.ones(2)) == 25.0

    def test_shape_mismatch(self):
        with pytest.raises(tc.DimensionError):
            tc.masked_sq_norm(np.zeros(3), np.zeros(4))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=1, max_value=40), st.integers(min_value=0, max_value=2**32 - 1))
    def test_against_loop(self, size, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(size)
        mask = (rng.random(size) < 0.5).astype(float)
        want = sum((a[i] * mask[i]) ** 2 for i in range(size))
        assert tc.masked_sq_norm(a, mask) == pytest.approx(want, abs=1e-12)
