"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Two operations dominate runtime: the exhaustive pairwise squared-distance
sweep behind kNN graph construction, and the CSR matrix-times-dense-matrix
product inside the label diffusion loop.  Both exist twice: an ``@njit``
implementation and a numpy one.  The active default is chosen at import
time; set ``JOINTPROP_NUMBA=0`` in the environment to force the numpy
path (the benchmark in ``benchmarks/bench_kernels.py`` compares the two).

Determinism contract: within one backend, results are bit-reproducible
across runs and thread counts.  The numba kernels reduce in a fixed
order (ascending feature dimension, ascending edge index) and
parallelize across rows only; the numpy path relies on numpy's own
deterministic reductions.  The two backends agree to rounding error,
not bit for bit.
"""

from __future__ import annotations

import os

import numpy as np

_ENV_FLAG = os.environ.get("JOINTPROP_NUMBA", "1").strip().lower()
_WANT_NUMBA = _ENV_FLAG not in ("0", "false", "no", "off")

try:  # pragma: no cover - exercised implicitly by backend selection
    if _WANT_NUMBA:
        # workqueue is always built in; the default probe order can trip
        # noisy warnings about mismatched TBB versions.
        os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
        from numba import njit, prange

        HAS_NUMBA = True
    else:
        HAS_NUMBA = False
except ImportError:  # pragma: no cover
    HAS_NUMBA = False


def active_backend() -> str:
    """Name of the backend used when no explicit override is passed."""
    return "numba" if HAS_NUMBA else "numpy"


def _resolve(backend: str | None) -> str:
    if backend is None:
        return active_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    return backend


# ---------------------------------------------------------------------------
# pairwise squared Euclidean distances, one row block against all points
# ---------------------------------------------------------------------------

def _sqdist_block_numpy(block: np.ndarray, points: np.ndarray) -> np.ndarray:
    # Difference-based form: the expanded |a|^2+|b|^2-2ab identity loses
    # digits to cancellation and would perturb neighbor tie decisions.
    return ((block[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)


if HAS_NUMBA:

    @njit(cache=True, parallel=True)
    def _sqdist_block_numba(block, points):  # pragma: no cover - jitted
        m, dim = block.shape
        t = points.shape[0]
        out = np.empty((m, t), dtype=np.float64)
        for i in prange(m):
            for j in range(t):
                acc = 0.0
                for d in range(dim):
                    diff = block[i, d] - points[j, d]
                    acc += diff * diff
                out[i, j] = acc
        return out


def sqdist_block(block: np.ndarray, points: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Squared Euclidean distances between each row of ``block`` and all ``points``.

    Both inputs must be float64 and share the feature dimension; returns an
    (m, T) float64 matrix.
    """
    which = _resolve(backend)
    block = np.ascontiguousarray(block, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    if which == "numba":
        return _sqdist_block_numba(block, points)
    return _sqdist_block_numpy(block, points)


# ---------------------------------------------------------------------------
# CSR sparse matrix times dense matrix
# ---------------------------------------------------------------------------

def _csr_matmat_numpy(indptr, indices, weights, dense):
    contrib = weights[:, None] * dense[indices]
    out = np.zeros((indptr.shape[0] - 1, dense.shape[1]), dtype=np.float64)
    lengths = np.diff(indptr)
    if np.all(lengths > 0):
        # reduceat may reassociate long segments, so the two backends agree
        # only to rounding; each is bit-reproducible run to run by itself.
        out[:] = np.add.reduceat(contrib, indptr[:-1], axis=0)
    else:
        nonempty = np.flatnonzero(lengths > 0)
        if nonempty.size:
            out[nonempty] = np.add.reduceat(contrib, indptr[:-1][nonempty], axis=0)
    return out


if HAS_NUMBA:

    @njit(cache=True)
    def _csr_matmat_numba(indptr, indices, weights, dense):  # pragma: no cover - jitted
        rows = indptr.shape[0] - 1
        cols = dense.shape[1]
        out = np.zeros((rows, cols), dtype=np.float64)
        for a in range(rows):
            for e in range(indptr[a], indptr[a + 1]):
                w = weights[e]
                b = indices[e]
                for u in range(cols):
                    out[a, u] += w * dense[b, u]
        return out


def csr_matmat(
    indptr: np.ndarray,
    indices: np.ndarray,
    weights: np.ndarray,
    dense: np.ndarray,
    backend: str | None = None,
) -> np.ndarray:
    """Product of a CSR matrix (indptr/indices/weights) with a dense (T, U) matrix."""
    which = _resolve(backend)
    dense = np.ascontiguousarray(dense, dtype=np.float64)
    if which == "numba":
        return _csr_matmat_numba(indptr, indices, weights, dense)
    return _csr_matmat_numpy(indptr, indices, weights, dense)


def warmup() -> str:
    """Trigger JIT compilation of the hot kernels; returns the active backend.

    Call once before timing anything so compile time never pollutes a
    measurement.  A no-op on the numpy backend.
    """
    pts = np.arange(8.0).reshape(4, 2)
    sqdist_block(pts[:2], pts)
    indptr = np.array([0, 1, 2], dtype=np.int64)
    indices = np.array([1, 0], dtype=np.int64)
    weights = np.array([0.5, 0.5], dtype=np.float64)
    csr_matmat(indptr, indices, weights, np.eye(2))
    return active_backend()
