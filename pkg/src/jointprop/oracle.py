"""Brute-force reference implementations for auditing the optimized paths.

Everything here trades speed for obviousness: dense matrices, exhaustive
sorts, explicit partial sums.  The test suite checks the production code
against these at small scale; they are shipped (not test-only) so any
run can be audited the same way.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError

MAX_DENSE_NODES = 2000


def _check_size(t: int) -> None:
    if t > MAX_DENSE_NODES:
        raise ValidationError(f"dense reference limited to {MAX_DENSE_NODES} nodes, got {t}")


def dense_affinity(features: np.ndarray, sigma: float) -> np.ndarray:
    """Full T x T Gaussian kernel matrix with zero diagonal.

    The fully connected variant the sparse kNN graph approximates.
    Accepts T = 1 (a 1 x 1 zero matrix); sparsity guards live elsewhere.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValidationError("features must be a (nodes, dim) matrix")
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    t = feats.shape[0]
    _check_size(t)
    out = np.zeros((t, t), dtype=np.float64)
    for a in range(t):
        for b in range(t):
            if a == b:
                continue
            diff = feats[a] - feats[b]
            d2 = float(np.dot(diff, diff))
            out[a, b] = np.exp(-d2 / (2.0 * sigma * sigma))
    return out


def knn_reference(features: np.ndarray, k: int) -> list[list[int]]:
    """Exhaustive sort-based k nearest neighbors per node.

    Sort key is (squared distance, node index), so distance ties go to
    the lower index, matching the sparse builder's rule.  k is clamped
    to T - 1.
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValidationError("features must be a (nodes, dim) matrix")
    if k < 1:
        raise ValidationError("k must be >= 1")
    t = feats.shape[0]
    _check_size(t)
    k = min(k, t - 1)
    neighbors = []
    for a in range(t):
        d2 = np.sum((feats - feats[a]) ** 2, axis=1)
        order = sorted((b for b in range(t) if b != a), key=lambda b: (d2[b], b))
        neighbors.append(order[:k])
    return neighbors


def propagate_reference(dense_s: np.ndarray, labels: np.ndarray, c: float, terms: int) -> np.ndarray:
    """Truncated-series evaluation of the propagation limit.

    Computes (cS)^(terms-1) Z + (1-c) * sum_{i=0}^{terms-2} (cS)^i Z by
    explicit matrix powers, independent of the fixed-point iteration.
    terms = 1 returns Z itself (the t = 0 iterate).
    """
    s = np.asarray(dense_s, dtype=np.float64)
    z = np.asarray(labels, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValidationError("dense_s must be square")
    if z.ndim != 2 or z.shape[0] != s.shape[0]:
        raise ValidationError("labels must have one row per node")
    if not 0 < c < 1:
        raise ValidationError("c must be in (0, 1)")
    if terms < 1:
        raise ValidationError("terms must be >= 1")
    _check_size(s.shape[0])

    running = z.copy()  # (cS)^i Z, starting at i = 0
    acc = np.zeros_like(z)
    for _ in range(terms - 1):
        acc += running
        running = c * (s @ running)
    return running + (1.0 - c) * acc
