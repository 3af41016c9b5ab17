"""Cross-backend agreement: the compiled kernels must reproduce the numpy
fallback bit for bit, so a build without the extension changes speed only."""

import numpy as np
import pytest

from phec.kernels import BACKEND, pure

try:
    from phec.kernels import _core
except ImportError:
    _core = None

needs_compiled = pytest.mark.skipif(_core is None, reason="compiled kernels unavailable")


def random_case(seed, n=200, d=5, positive_rate=0.4):
    rng = np.random.default_rng(seed)
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    y = (rng.random(n) < positive_rate).astype(np.uint8)
    return X, y, rng


@needs_compiled
class TestSplitKernelAgreement:
    def test_identical_on_random_nodes(self):
        for seed in range(25):
            X, y, rng = random_case(seed, n=int(np.random.default_rng(seed).integers(5, 150)))
            fids = np.sort(rng.choice(X.shape[1], size=3, replace=False)).astype(np.int64)
            got_c = _core.best_gini_split(X, y, fids)
            got_p = pure.best_gini_split(X, y, fids)
            assert got_c[0] == got_p[0]
            assert (got_c[1] == got_p[1]) or (np.isnan(got_c[1]) and np.isnan(got_p[1]))
            assert (got_c[2] == got_p[2]) or (np.isinf(got_c[2]) and np.isinf(got_p[2]))

    def test_identical_with_heavy_ties(self):
        # quantized features create duplicate values and equal-score candidates
        rng = np.random.default_rng(99)
        X = np.ascontiguousarray(np.round(rng.random((120, 4)) * 4) / 4)
        y = (rng.random(120) < 0.5).astype(np.uint8)
        fids = np.arange(4, dtype=np.int64)
        assert _core.best_gini_split(X, y, fids) == pure.best_gini_split(X, y, fids)

    def test_constant_columns_give_no_split(self):
        X = np.ones((10, 2))
        y = np.array([0, 1] * 5, dtype=np.uint8)
        fids = np.arange(2, dtype=np.int64)
        f_c, _, _ = _core.best_gini_split(X, y, fids)
        f_p, _, _ = pure.best_gini_split(X, y, fids)
        assert f_c == f_p == -1


@needs_compiled
class TestKnnKernelAgreement:
    def test_identical_counts(self):
        for seed in range(10):
            X, y, rng = random_case(seed, n=300, d=6)
            queries = rng.normal(size=(40, 6))
            for k in (1, 5, 17):
                assert np.array_equal(
                    _core.knn_query(X, y, queries, k), pure.knn_query(X, y, queries, k)
                )

    def test_identical_with_duplicate_points(self):
        rng = np.random.default_rng(7)
        base = rng.normal(size=(20, 3))
        X = np.ascontiguousarray(np.vstack([base, base, base]))
        y = (rng.random(60) < 0.5).astype(np.uint8)
        queries = base[:10] + 1e-9
        assert np.array_equal(
            _core.knn_query(X, y, queries, 7), pure.knn_query(X, y, queries, 7)
        )


class TestBackendSelection:
    def test_backend_name_known(self):
        assert BACKEND in ("compiled", "pure")

    def test_env_var_forces_pure(self):
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-c", "import phec; print(phec.kernel_backend)"],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin", "PHEC_PURE_PYTHON": "1"},
        )
        assert out.stdout.strip() == "pure"
