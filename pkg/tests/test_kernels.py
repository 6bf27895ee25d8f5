"""Backend contract tests: reference vs compiled, and both vs brute force."""

import numpy as np
import pytest

from winosparse import kernels
from winosparse.kernels import reference

try:
    from winosparse.kernels import _fast
except ImportError:
    _fast = None

BACKENDS = [reference] + ([_fast] if _fast is not None else [])


def naive_conv2d(x, w):
    b, c, h, wid = x.shape
    d, _, r, s = w.shape
    out = np.zeros((b, d, h - r + 1, wid - s + 1))
    for ib in range(b):
        for od in range(d):
            for ic in range(c):
                for p in range(out.shape[2]):
                    for q in range(out.shape[3]):
                        for u in range(r):
                            for v in range(s):
                                out[ib, od, p, q] += w[od, ic, u, v] * x[ib, ic, p + u, q + v]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
class TestAgainstBruteForce:
    def test_conv2d(self, impl, rng):
        x = np.ascontiguousarray(rng.standard_normal((2, 3, 6, 7)))
        w = np.ascontiguousarray(rng.standard_normal((4, 3, 3, 3)))
        assert np.max(np.abs(impl.conv2d(x, w) - naive_conv2d(x, w))) < 1e-12

    def test_input_grad_is_transpose_of_forward(self, impl, rng):
        # <conv(x), gy> == <x, input_grad(gy)> for all x, gy: the adjoint test.
        x = np.ascontiguousarray(rng.standard_normal((2, 3, 6, 6)))
        w = np.ascontiguousarray(rng.standard_normal((2, 3, 3, 3)))
        gy = np.ascontiguousarray(rng.standard_normal((2, 2, 4, 4)))
        lhs = float(np.sum(impl.conv2d(x, w) * gy))
        rhs = float(np.sum(x * impl.conv2d_input_grad(gy, w)))
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_weight_grad_is_transpose_of_forward(self, impl, rng):
        # <conv(x; w), gy> == <w, weight_grad(x, gy)>.
        x = np.ascontiguousarray(rng.standard_normal((2, 3, 6, 6)))
        w = np.ascontiguousarray(rng.standard_normal((2, 3, 3, 3)))
        gy = np.ascontiguousarray(rng.standard_normal((2, 2, 4, 4)))
        lhs = float(np.sum(impl.conv2d(x, w) * gy))
        rhs = float(np.sum(w * impl.conv2d_weight_grad(x, gy)))
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_winograd_domain_product(self, impl, rng):
        xt = np.ascontiguousarray(rng.standard_normal((2, 3, 4, 4, 4)))
        wt = np.ascontiguousarray(rng.standard_normal((5, 4, 4, 4)))
        got = impl.winograd_domain_product(xt, wt)
        want = np.einsum("btcij,dcij->btdij", xt, wt)
        assert np.max(np.abs(got - want)) < 1e-12

    def test_sparse_conv2d_matches_densified(self, impl, rng):
        x = np.ascontiguousarray(rng.standard_normal((2, 2, 6, 6)))
        w = rng.standard_normal((3, 2, 3, 3))
        w[np.abs(w) < 0.8] = 0.0
        d, c, u, v = np.nonzero(w)
        got = impl.sparse_conv2d(
            x,
            d.astype(np.int64),
            c.astype(np.int64),
            u.astype(np.int64),
            v.astype(np.int64),
            np.ascontiguousarray(w[d, c, u, v]),
            3,
            3,
        )
        assert np.max(np.abs(got - naive_conv2d(x, w))) < 1e-12


@pytest.mark.skipif(_fast is None, reason="compiled backend not built")
class TestBackendsAgree:
    def test_all_functions(self, rng):
        x = np.ascontiguousarray(rng.standard_normal((3, 4, 9, 8)))
        w = np.ascontiguousarray(rng.standard_normal((5, 4, 3, 3)))
        gy = np.ascontiguousarray(rng.standard_normal((3, 5, 7, 6)))
        pairs = [
            (reference.conv2d(x, w), _fast.conv2d(x, w)),
            (reference.conv2d_input_grad(gy, w), _fast.conv2d_input_grad(gy, w)),
            (reference.conv2d_weight_grad(x, gy), _fast.conv2d_weight_grad(x, gy)),
        ]
        xt = np.ascontiguousarray(rng.standard_normal((2, 6, 4, 6, 6)))
        wt = np.ascontiguousarray(rng.standard_normal((3, 4, 6, 6)))
        pairs.append((reference.winograd_domain_product(xt, wt), _fast.winograd_domain_product(xt, wt)))
        for ref, fast in pairs:
            scale = max(1.0, float(np.max(np.abs(ref))))
            assert np.max(np.abs(ref - fast)) / scale < 1e-12

    def test_sparse_agree(self, rng):
        x = np.ascontiguousarray(rng.standard_normal((2, 3, 8, 8)))
        w = rng.standard_normal((4, 3, 5, 5))
        w[np.abs(w) < 1.0] = 0.0
        d, c, u, v = (a.astype(np.int64) for a in np.nonzero(w))
        vals = np.ascontiguousarray(w[d, c, u, v])
        ref = reference.sparse_conv2d(x, d, c, u, v, vals, 4, 5)
        fast = _fast.sparse_conv2d(x, d, c, u, v, vals, 4, 5)
        assert np.max(np.abs(ref - fast)) < 1e-12


def test_selected_backend_exports():
    assert kernels.BACKEND in ("fast", "reference")
    out = kernels.conv2d(np.zeros((1, 1, 3, 3)), np.zeros((1, 1, 3, 3)))
    assert out.shape == (1, 1, 1, 1)
