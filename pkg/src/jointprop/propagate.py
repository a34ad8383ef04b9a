"""Fixed-point label propagation and confidence-filtered decoding.

The iteration Y_{t+1} = c * S @ Y_t + (1 - c) * Z starts from Y_0 = Z and
contracts geometrically because the normalized adjacency has spectrum in
[-1, 1] and 0 < c < 1.  The closed form (1 - c) (I - cS)^(-1) Z is the
same limit via a dense solve, kept for small graphs and for testing.

Decoding turns converged rows of unlabeled nodes into pseudo-labels:
all-zero rows abstain outright (softmax of a zero vector would invent
uniform confidence from no evidence), every other row takes the softmax
argmax, and only confidences at or above the threshold are emitted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import STAGE_NORMALIZED, AffinityGraph
from .spans import NodePartition

DEFAULT_MIXING = 0.99
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITERS = 10000
DEFAULT_THRESHOLD = 0.7
DENSE_SOLVE_LIMIT = 2000


@dataclass(frozen=True)
class PseudoLabel:
    """A propagated class assignment on one unlabeled candidate."""

    candidate: object
    class_index: int
    class_name: str
    confidence: float


@dataclass
class PropagationResult:
    scores: np.ndarray
    iterations: int
    residual: float
    converged: bool


def _check_inputs(graph: AffinityGraph, labels: np.ndarray, c: float) -> np.ndarray:
    if graph.stage != STAGE_NORMALIZED:
        raise ValidationError(f"propagation expects a stage-{STAGE_NORMALIZED} graph, got {graph.stage}")
    z = np.asarray(labels, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != graph.num_nodes:
        raise ValidationError("label matrix must have one row per graph node")
    if not 0 < c < 1:
        raise ValidationError("c must be in (0, 1)")
    row_mass = z.sum(axis=1)
    if not np.any(row_mass):
        raise ValidationError("no labeled seed nodes")
    return z


def seed_matrix(partition: NodePartition, num_classes: int) -> np.ndarray:
    """One-hot rows for seeds, zero rows for unlabeled, in graph row order."""
    if num_classes < 1:
        raise ValidationError("catalog has no classes for this task")
    z = np.zeros((partition.num_nodes, num_classes), dtype=np.float64)
    for row, (_, class_index) in enumerate(partition.labeled):
        if not 0 <= class_index < num_classes:
            raise ValidationError(f"seed class index {class_index} outside catalog")
        z[row, class_index] = 1.0
    return z


def propagate_iterative(
    graph: AffinityGraph,
    labels: np.ndarray,
    c: float = DEFAULT_MIXING,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    trace: list | None = None,
    backend: str | None = None,
) -> PropagationResult:
    """Iterate to convergence; never silently accept a non-converged run.

    The residual is the max-norm of the update.  When ``trace`` is given,
    (iteration, residual) pairs are appended to it.
    """
    z = _check_inputs(graph, labels, c)
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if max_iters < 1:
        raise ValidationError("max_iters must be >= 1")

    base = (1.0 - c) * z
    y = z.copy()
    residual = np.inf
    iterations = 0
    for t in range(1, max_iters + 1):
        y_next = c * graph.matmat(y, backend=backend) + base
        residual = float(np.max(np.abs(y_next - y)))
        y = y_next
        iterations = t
        if trace is not None:
            trace.append((t, residual))
        if residual < tol:
            return PropagationResult(y, iterations, residual, True)
    return PropagationResult(y, iterations, residual, False)


def propagate_closed_form(
    graph: AffinityGraph,
    labels: np.ndarray,
    c: float = DEFAULT_MIXING,
    dense_limit: int = DENSE_SOLVE_LIMIT,
) -> np.ndarray:
    """Y = (1 - c) (I - cS)^(-1) Z by dense solve; small graphs only."""
    z = _check_inputs(graph, labels, c)
    t = graph.num_nodes
    if t > dense_limit:
        raise ValidationError(
            f"closed-form solve limited to {dense_limit} nodes, got {t}; use the iterative solver"
        )
    system = np.eye(t) - c * graph.to_dense()
    return (1.0 - c) * np.linalg.solve(system, z)


def _row_confidence(row: np.ndarray) -> tuple[int, float]:
    shifted = np.exp(row - row.max())
    cls = int(np.argmax(row))
    return cls, float(shifted[cls] / shifted.sum())


def decode(
    scores: np.ndarray,
    partition: NodePartition,
    classes: tuple[str, ...],
    threshold: float = DEFAULT_THRESHOLD,
    quantile: float | None = None,
) -> list[PseudoLabel]:
    """Emit pseudo-labels for unlabeled nodes above the confidence bar.

    Softmax confidences over a small class count cluster near 1/U, so a
    fixed threshold can be degenerate; ``quantile`` switches the bar to
    np.quantile of the observed (non-abstained) confidences instead.
    Labeled nodes are never re-emitted.
    """
    y = np.asarray(scores, dtype=np.float64)
    if y.ndim != 2 or y.shape[0] != partition.num_nodes:
        raise ValidationError("score matrix does not match the node partition")
    if y.shape[1] != len(classes):
        raise ValidationError("score matrix does not match the class catalog")
    if quantile is not None and not 0.0 <= quantile <= 1.0:
        raise ValidationError("quantile must be in [0, 1]")

    scored: list[tuple[object, int, float]] = []
    for i, cand in enumerate(partition.unlabeled):
        row = y[partition.num_labeled + i]
        if not np.any(row):
            continue  # zero row: the graph never reached this node
        cls, conf = _row_confidence(row)
        scored.append((cand, cls, conf))

    if not scored:
        return []
    bar = threshold if quantile is None else float(np.quantile([c for _, _, c in scored], quantile))
    return [
        PseudoLabel(cand, cls, classes[cls], conf)
        for cand, cls, conf in scored
        if conf >= bar
    ]
