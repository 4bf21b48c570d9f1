import numpy as np
import pytest

from conceptscope.backend import HAS_NUMBA
from conceptscope.kernels import numpy_impl

if HAS_NUMBA:
    from conceptscope.kernels import numba_impl
    BACKENDS = [("numpy", numpy_impl), ("numba", numba_impl)]
else:
    BACKENDS = [("numpy", numpy_impl)]


@pytest.mark.parametrize("name,impl", BACKENDS)
class TestSigmoid:
    def test_extreme_logits_do_not_overflow(self, name, impl):
        z = np.array([-1e4, -50.0, 0.0, 50.0, 1e4])
        out = impl.sigmoid(z)
        assert np.all(np.isfinite(out))
        assert out[2] == 0.5

    def test_log_sigmoid_finite(self, name, impl):
        z = np.array([-1e4, 0.0, 1e4])
        out = impl.log_sigmoid(z)
        assert np.all(np.isfinite(out))
        assert out[1] == pytest.approx(-np.log(2.0), rel=1e-15)
        assert out[0] == pytest.approx(-1e4)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")
class TestBackendEquivalence:
    def test_logp_grad_agree(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            N, D, K = int(rng.integers(2, 30)), int(rng.integers(1, 4)), int(rng.integers(1, 4))
            X = rng.normal(size=(N, D))
            y = rng.integers(0, 2, N).astype(np.float64)
            flat = rng.normal(size=K * D + 2 * K + 1)
            lp_a, g_a = numpy_impl.logp_grad(flat, X, y, K, -1, np.empty(0), 1.0, 1.3)
            lp_b, g_b = numba_impl.logp_grad(flat, X, y, K, -1, np.empty(0), 1.0, 1.3)
            assert lp_a == pytest.approx(lp_b, rel=1e-12)
            assert np.allclose(g_a, g_b, rtol=1e-10, atol=1e-12)

    def test_logp_grad_agree_pinned(self):
        rng = np.random.default_rng(1)
        N, D, K = 12, 2, 3
        X = rng.normal(size=(N, D))
        y = rng.integers(0, 2, N).astype(np.float64)
        pin_values = rng.uniform(size=N)
        flat = rng.normal(size=(K - 1) * (D + 1) + K + 1)
        for pin_col in range(K):
            lp_a, g_a = numpy_impl.logp_grad(flat, X, y, K, pin_col, pin_values, 1.0, 1.0)
            lp_b, g_b = numba_impl.logp_grad(flat, X, y, K, pin_col, pin_values, 1.0, 1.0)
            assert lp_a == pytest.approx(lp_b, rel=1e-12)
            assert np.allclose(g_a, g_b, rtol=1e-10, atol=1e-12)

    def test_row_dists_agree(self):
        rng = np.random.default_rng(2)
        mat = np.ascontiguousarray(rng.uniform(size=(20, 15)))
        for metric_id, scale in ((0, 1.0), (2, 1.0), (3, 15.0)):
            a = numpy_impl.row_dists(mat, 3, metric_id, scale)
            b = numba_impl.row_dists(mat, 3, metric_id, scale)
            assert np.allclose(a, b, rtol=1e-12)
        unit = mat / np.linalg.norm(mat, axis=1, keepdims=True)
        unit = np.ascontiguousarray(unit)
        a = numpy_impl.row_dists(unit, 3, 1, 1.0)
        b = numba_impl.row_dists(unit, 3, 1, 1.0)
        assert np.allclose(a, b, rtol=1e-12)
