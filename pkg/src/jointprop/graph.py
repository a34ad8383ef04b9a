"""Sparse affinity graph construction: Gaussian kNN, symmetrize, normalize.

The graph moves through three stages, tagged on the object:

  A  directed kNN adjacency with Gaussian kernel weights
     exp(-||h_a - h_b||^2 / (2 sigma^2)), zero diagonal;
  O  the exact symmetrization A + A^T (mutual edges double);
  S  the symmetrically normalized form H^(-1/2) O H^(-1/2), H = diag of
     row sums, whose spectrum lies in [-1, 1].

kNN is exact (exhaustive blocked search), never approximate: determinism
and testability beat speed at the intended scales.  Ties in neighbor
selection go to the lower node index.  Symmetry of O and S holds on
stored values, not merely within tolerance, because both triangles are
computed from identical inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ValidationError

STAGE_RAW = "A"
STAGE_SYMMETRIC = "O"
STAGE_NORMALIZED = "S"

_BLOCK_ROWS = 256


@dataclass
class AffinityGraph:
    """CSR adjacency (indptr/indices/weights) plus a construction-stage tag."""

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    stage: str

    @property
    def num_edges(self) -> int:
        return int(self.indices.shape[0])

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.num_nodes, self.num_nodes), dtype=np.float64)
        for a in range(self.num_nodes):
            lo, hi = self.indptr[a], self.indptr[a + 1]
            dense[a, self.indices[lo:hi]] = self.weights[lo:hi]
        return dense

    def row_sums(self) -> np.ndarray:
        sums = np.zeros(self.num_nodes, dtype=np.float64)
        rows = np.repeat(np.arange(self.num_nodes), np.diff(self.indptr))
        np.add.at(sums, rows, self.weights)
        return sums

    def matmat(self, dense: np.ndarray, backend: str | None = None) -> np.ndarray:
        return kernels.csr_matmat(self.indptr, self.indices, self.weights, dense, backend=backend)


def _select_neighbors(dist_row: np.ndarray, self_index: int, k: int) -> np.ndarray:
    """Indices of the k nearest by (distance, index) ascending, self excluded."""
    d = dist_row.copy()
    d[self_index] = np.inf
    kth = np.partition(d, k - 1)[k - 1]
    strict = np.flatnonzero(d < kth)
    fill = k - strict.shape[0]
    equal = np.flatnonzero(d == kth)[:fill]
    return np.sort(np.concatenate([strict, equal]))


def knn_affinity(features: np.ndarray, k: int, sigma: float, backend: str | None = None) -> AffinityGraph:
    """Directed Gaussian-kernel kNN graph over row-vector features (stage A).

    ``k`` is clamped to T-1.  Distances are Euclidean on float64-widened
    features; the weight of edge (a, b) is exp(-d(a,b)^2 / (2 sigma^2)).
    """
    feats = np.asarray(features, dtype=np.float64)
    if feats.ndim != 2:
        raise ValidationError("features must be a (nodes, dim) matrix")
    t = feats.shape[0]
    if t < 2:
        raise ValidationError("graph needs at least two nodes")
    if not np.all(np.isfinite(feats)):
        raise ValidationError("non-finite feature value")
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    if k < 1:
        raise ValidationError("k must be >= 1")
    k = min(k, t - 1)

    inv = 1.0 / (2.0 * sigma * sigma)
    indptr = np.arange(0, (t + 1) * k, k, dtype=np.int64)
    indices = np.empty(t * k, dtype=np.int64)
    weights = np.empty(t * k, dtype=np.float64)

    for block_start in range(0, t, _BLOCK_ROWS):
        block_stop = min(block_start + _BLOCK_ROWS, t)
        dists = kernels.sqdist_block(feats[block_start:block_stop], feats, backend=backend)
        for a in range(block_start, block_stop):
            nbrs = _select_neighbors(dists[a - block_start], a, k)
            lo = a * k
            indices[lo : lo + k] = nbrs
            weights[lo : lo + k] = np.exp(-dists[a - block_start][nbrs] * inv)

    return AffinityGraph(t, indptr, indices, weights, STAGE_RAW)


def symmetrize(graph: AffinityGraph) -> AffinityGraph:
    """O = A + A^T as an exact sparse merge (stage O)."""
    if graph.stage != STAGE_RAW:
        raise ValidationError(f"symmetrize expects a stage-{STAGE_RAW} graph, got {graph.stage}")
    t = graph.num_nodes
    rows = np.repeat(np.arange(t, dtype=np.int64), np.diff(graph.indptr))
    cols = graph.indices
    # Forward and transposed copies, coalesced by (row, col).
    all_rows = np.concatenate([rows, cols])
    all_cols = np.concatenate([cols, rows])
    all_w = np.concatenate([graph.weights, graph.weights])

    keys = all_rows * t + all_cols
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    all_w = all_w[order]

    unique_keys, starts = np.unique(keys, return_index=True)
    summed = np.add.reduceat(all_w, starts)

    out_rows = unique_keys // t
    out_cols = unique_keys % t
    indptr = np.zeros(t + 1, dtype=np.int64)
    np.add.at(indptr, out_rows + 1, 1)
    indptr = np.cumsum(indptr)
    return AffinityGraph(t, indptr, out_cols.astype(np.int64), summed, STAGE_SYMMETRIC)


def normalize(graph: AffinityGraph) -> AffinityGraph:
    """S = H^(-1/2) O H^(-1/2) with H = diag(row sums of O) (stage S)."""
    if graph.stage != STAGE_SYMMETRIC:
        raise ValidationError(f"normalize expects a stage-{STAGE_SYMMETRIC} graph, got {graph.stage}")
    sums = graph.row_sums()
    bad = np.flatnonzero(sums <= 0)
    if bad.size:
        raise ValidationError(f"zero row sum at node {int(bad[0])} (isolated node)")
    rows = np.repeat(np.arange(graph.num_nodes), np.diff(graph.indptr))
    scale = np.sqrt(sums[rows] * sums[graph.indices])
    return AffinityGraph(
        graph.num_nodes,
        graph.indptr.copy(),
        graph.indices.copy(),
        graph.weights / scale,
        STAGE_NORMALIZED,
    )


def build_normalized_graph(
    features: np.ndarray, k: int, sigma: float, backend: str | None = None
) -> AffinityGraph:
    """Convenience chain: kNN affinity -> symmetrize -> normalize."""
    return normalize(symmetrize(knn_affinity(features, k, sigma, backend=backend)))


def write_graph_dump(graph: AffinityGraph, fh, extra: dict | None = None) -> None:
    """Diagnostic JSONL dump of (node, neighbor, weight) triples.

    Weights are serialized with repr precision, which round-trips the
    stored float64 exactly.  ``extra`` keys (e.g. task/round labels) are
    merged into every line.
    """
    extra = extra or {}
    for a in range(graph.num_nodes):
        lo, hi = graph.indptr[a], graph.indptr[a + 1]
        for e in range(lo, hi):
            obj = dict(extra)
            obj["node"] = int(a)
            obj["neighbor"] = int(graph.indices[e])
            obj["weight"] = float(graph.weights[e])
            fh.write(json.dumps(obj, separators=(", ", ": ")))
            fh.write("\n")
