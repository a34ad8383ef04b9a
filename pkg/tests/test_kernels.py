import numpy as np
import pytest

from jointprop import kernels

BACKENDS = ["numpy"] + (["numba"] if kernels.HAS_NUMBA else [])


def brute_sqdist(block, points):
    out = np.zeros((block.shape[0], points.shape[0]))
    for i in range(block.shape[0]):
        for j in range(points.shape[0]):
            diff = block[i] - points[j]
            out[i, j] = np.dot(diff, diff)
    return out


def random_csr(rng, rows, cols, fill):
    indptr = [0]
    indices = []
    for _ in range(rows):
        count = int(rng.integers(0, fill + 1))
        row_idx = sorted(rng.choice(cols, size=count, replace=False))
        indices.extend(row_idx)
        indptr.append(len(indices))
    indptr = np.array(indptr, dtype=np.int64)
    indices = np.array(indices, dtype=np.int64)
    weights = rng.standard_normal(len(indices))
    return indptr, indices, weights


def csr_to_dense(indptr, indices, weights, rows, cols):
    dense = np.zeros((rows, cols))
    for r in range(rows):
        for e in range(indptr[r], indptr[r + 1]):
            dense[r, indices[e]] = weights[e]
    return dense


@pytest.mark.parametrize("backend", BACKENDS)
class TestSqdist:
    def test_matches_brute_force(self, backend):
        rng = np.random.default_rng(11)
        block = rng.standard_normal((17, 9))
        points = rng.standard_normal((40, 9))
        got = kernels.sqdist_block(block, points, backend=backend)
        np.testing.assert_allclose(got, brute_sqdist(block, points), rtol=1e-12, atol=1e-12)

    def test_exact_on_integer_grid(self, backend):
        # every intermediate is an exact float64 integer, so the result
        # must be exact regardless of summation order
        rng = np.random.default_rng(3)
        block = rng.integers(-50, 50, size=(12, 5)).astype(np.float64)
        points = rng.integers(-50, 50, size=(30, 5)).astype(np.float64)
        got = kernels.sqdist_block(block, points, backend=backend)
        assert np.array_equal(got, brute_sqdist(block, points))

    def test_zero_distance_diagonal(self, backend):
        pts = np.random.default_rng(5).standard_normal((8, 4))
        got = kernels.sqdist_block(pts, pts, backend=backend)
        assert np.array_equal(np.diag(got), np.zeros(8))

    def test_run_to_run_bitwise_stable(self, backend):
        rng = np.random.default_rng(13)
        block = rng.standard_normal((25, 33))
        points = rng.standard_normal((60, 33))
        a = kernels.sqdist_block(block, points, backend=backend)
        b = kernels.sqdist_block(block, points, backend=backend)
        assert np.array_equal(a, b)


@pytest.mark.parametrize("backend", BACKENDS)
class TestCsrMatmat:
    def test_matches_dense_product(self, backend):
        rng = np.random.default_rng(7)
        rows, cols, width = 30, 30, 12
        indptr, indices, weights = random_csr(rng, rows, cols, fill=8)
        dense = rng.standard_normal((cols, width))
        got = kernels.csr_matmat(indptr, indices, weights, dense, backend=backend)
        want = csr_to_dense(indptr, indices, weights, rows, cols) @ dense
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_empty_rows_yield_zeros(self, backend):
        indptr = np.array([0, 0, 2, 2], dtype=np.int64)
        indices = np.array([0, 2], dtype=np.int64)
        weights = np.array([2.0, -1.0])
        dense = np.eye(3)
        got = kernels.csr_matmat(indptr, indices, weights, dense, backend=backend)
        assert np.array_equal(got[0], np.zeros(3))
        assert np.array_equal(got[2], np.zeros(3))
        assert np.array_equal(got[1], np.array([2.0, 0.0, -1.0]))

    def test_all_rows_empty(self, backend):
        indptr = np.zeros(5, dtype=np.int64)
        got = kernels.csr_matmat(
            indptr, np.zeros(0, dtype=np.int64), np.zeros(0), np.eye(4), backend=backend
        )
        assert np.array_equal(got, np.zeros((4, 4)))

    def test_run_to_run_bitwise_stable(self, backend):
        rng = np.random.default_rng(23)
        indptr, indices, weights = random_csr(rng, 50, 50, fill=20)
        dense = rng.standard_normal((50, 7))
        a = kernels.csr_matmat(indptr, indices, weights, dense, backend=backend)
        b = kernels.csr_matmat(indptr, indices, weights, dense, backend=backend)
        assert np.array_equal(a, b)


class TestBackendSelection:
    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            kernels.sqdist_block(np.zeros((2, 2)), np.zeros((2, 2)), backend="fortran")

    def test_active_backend_name(self):
        assert kernels.active_backend() in ("numba", "numpy")

    def test_backends_agree_to_rounding(self):
        if not kernels.HAS_NUMBA:
            pytest.skip("numba unavailable")
        rng = np.random.default_rng(29)
        block = rng.standard_normal((20, 15))
        points = rng.standard_normal((45, 15))
        a = kernels.sqdist_block(block, points, backend="numba")
        b = kernels.sqdist_block(block, points, backend="numpy")
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)

    def test_env_flag_forces_numpy(self, tmp_path):
        import subprocess
        import sys

        code = "from jointprop import kernels; print(kernels.active_backend())"
        out = subprocess.run(
            [sys.executable, "-c", code],
            env={"PATH": "/usr/bin:/bin", "JOINTPROP_NUMBA": "0"},
            capture_output=True,
            text=True,
            check=True,
        )
        assert out.stdout.strip() == "numpy"
