import math

import numpy as np
import pytest

import helpers
from jointprop import ValidationError
from jointprop.graph import STAGE_NORMALIZED, STAGE_RAW, build_normalized_graph
from jointprop.propagate import (
    decode,
    propagate_closed_form,
    propagate_iterative,
    seed_matrix,
)
from jointprop.spans import NodePartition, SpanCandidate


def two_node_graph():
    return helpers.graph_from_dense([[0.0, 1.0], [1.0, 0.0]], STAGE_NORMALIZED)


def seeds_z():
    return np.array([[1.0, 0.0], [0.0, 0.0]])


class TestIterative:
    def test_two_node_worked_case(self):
        result = propagate_iterative(two_node_graph(), seeds_z(), c=0.5, tol=1e-12)
        assert result.converged
        np.testing.assert_allclose(result.scores, [[2 / 3, 0], [1 / 3, 0]], atol=1e-10)

    def test_zero_label_column_stays_zero(self):
        z = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        result = propagate_iterative(two_node_graph(), z, c=0.5, tol=1e-12)
        assert np.array_equal(result.scores[:, 1], np.zeros(2))
        assert np.array_equal(result.scores[:, 2], np.zeros(2))

    def test_residuals_decrease_geometrically(self):
        trace = []
        propagate_iterative(two_node_graph(), seeds_z(), c=0.5, tol=1e-12, trace=trace)
        residuals = [r for _, r in trace]
        ratios = [b / a for a, b in zip(residuals, residuals[1:]) if a > 0]
        assert all(r <= 0.5 + 1e-9 for r in ratios)

    def test_non_convergence_is_reported(self):
        result = propagate_iterative(two_node_graph(), seeds_z(), c=0.99, tol=1e-12, max_iters=3)
        assert not result.converged
        assert result.iterations == 3
        assert result.residual > 1e-12

    def test_trace_records_every_iteration(self):
        trace = []
        result = propagate_iterative(two_node_graph(), seeds_z(), c=0.5, tol=1e-9, trace=trace)
        assert [t for t, _ in trace] == list(range(1, result.iterations + 1))

    def test_backend_override_agrees_with_default(self):
        rng = np.random.default_rng(3)
        feats = rng.normal(size=(40, 4))
        graph = build_normalized_graph(feats, 5, 2.0)
        z = np.zeros((40, 3))
        z[:6, rng.integers(0, 3, 6)] = 1.0
        default = propagate_iterative(graph, z, c=0.9, tol=1e-10)
        fallback = propagate_iterative(graph, z, c=0.9, tol=1e-10, backend="numpy")
        assert np.max(np.abs(default.scores - fallback.scores)) <= 1e-13

    def test_input_validation(self):
        graph = two_node_graph()
        with pytest.raises(ValidationError, match="no labeled seed nodes"):
            propagate_iterative(graph, np.zeros((2, 2)), c=0.5)
        with pytest.raises(ValidationError, match="c must be"):
            propagate_iterative(graph, seeds_z(), c=1.0)
        with pytest.raises(ValidationError, match="one row per graph node"):
            propagate_iterative(graph, np.zeros((3, 2)), c=0.5)
        with pytest.raises(ValidationError, match="tol"):
            propagate_iterative(graph, seeds_z(), c=0.5, tol=0.0)
        raw = helpers.graph_from_dense([[0.0, 1.0], [1.0, 0.0]], STAGE_RAW)
        with pytest.raises(ValidationError, match="expects a stage-S graph"):
            propagate_iterative(raw, seeds_z(), c=0.5)


class TestClosedForm:
    def test_two_node_exact(self):
        scores = propagate_closed_form(two_node_graph(), seeds_z(), c=0.5)
        np.testing.assert_allclose(scores, [[2 / 3, 0], [1 / 3, 0]], atol=1e-12)

    def test_matches_iterative_on_random_instances(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            t = int(rng.integers(5, 50))
            graph = build_normalized_graph(rng.standard_normal((t, 4)), k=4, sigma=2.0)
            u = int(rng.integers(2, 6))
            z = np.zeros((t, u))
            for row in range(max(1, t // 3)):
                z[row, int(rng.integers(0, u))] = 1.0
            closed = propagate_closed_form(graph, z, c=0.99)
            iterated = propagate_iterative(graph, z, c=0.99, tol=1e-12, max_iters=20000)
            assert iterated.converged
            np.testing.assert_allclose(closed, iterated.scores, atol=1e-8)

    def test_dense_limit_error_mentions_iterative(self):
        graph = two_node_graph()
        with pytest.raises(ValidationError, match="use the iterative solver"):
            propagate_closed_form(graph, seeds_z(), c=0.5, dense_limit=1)


class TestSeedMatrix:
    def test_one_hot_rows_then_zeros(self):
        part = NodePartition(
            labeled=[(SpanCandidate("a", 0, 0), 1), (SpanCandidate("a", 1, 1), 0)],
            unlabeled=[SpanCandidate("b", 0, 0)],
        )
        z = seed_matrix(part, num_classes=3)
        np.testing.assert_array_equal(z, [[0, 1, 0], [1, 0, 0], [0, 0, 0]])

    def test_class_index_guard(self):
        part = NodePartition(labeled=[(SpanCandidate("a", 0, 0), 5)])
        with pytest.raises(ValidationError, match="outside catalog"):
            seed_matrix(part, num_classes=2)

    def test_empty_catalog_guard(self):
        with pytest.raises(ValidationError, match="no classes"):
            seed_matrix(NodePartition(), num_classes=0)


def decode_partition(n_unlabeled, n_seeds=1):
    return NodePartition(
        labeled=[(SpanCandidate("seed", i, i), 0) for i in range(n_seeds)],
        unlabeled=[SpanCandidate("u", i, i) for i in range(n_unlabeled)],
    )


class TestDecode:
    def test_softmax_confidence_worked_case(self):
        part = decode_partition(1)
        scores = np.array([[1.0, 0.0], [2 / 3, 1 / 3]])
        labels = decode(scores, part, ("alpha", "beta"), threshold=0.5)
        assert len(labels) == 1
        lab = labels[0]
        want = math.exp(2 / 3) / (math.exp(2 / 3) + math.exp(1 / 3))
        assert lab.class_index == 0 and lab.class_name == "alpha"
        assert abs(lab.confidence - want) < 1e-15
        assert abs(lab.confidence - 0.5826) < 5e-5

    def test_threshold_blocks_emission(self):
        part = decode_partition(1)
        scores = np.array([[1.0, 0.0], [2 / 3, 1 / 3]])
        assert decode(scores, part, ("a", "b"), threshold=0.9) == []

    def test_zero_row_abstains_at_any_threshold(self):
        part = decode_partition(2)
        scores = np.array([[1.0, 0.0], [0.0, 0.0], [0.5, 0.2]])
        labels = decode(scores, part, ("a", "b"), threshold=0.0)
        assert [l.candidate for l in labels] == [part.unlabeled[1]]

    def test_labeled_rows_never_emitted(self):
        part = decode_partition(1, n_seeds=2)
        scores = np.array([[9.0, 0.0], [9.0, 0.0], [0.4, 0.1]])
        labels = decode(scores, part, ("a", "b"), threshold=0.0)
        assert len(labels) == 1 and labels[0].candidate == part.unlabeled[0]

    def test_quantile_threshold(self):
        part = decode_partition(4)
        scores = np.vstack([[1.0, 0.0]] + [[m, 0.0] for m in (0.1, 0.2, 0.3, 0.4)])
        all_labels = decode(scores, part, ("a", "b"), quantile=0.0)
        assert len(all_labels) == 4
        top_half = decode(scores, part, ("a", "b"), quantile=0.5)
        assert len(top_half) == 2
        confs = sorted(l.confidence for l in all_labels)
        assert {l.confidence for l in top_half} == set(confs[2:])

    def test_quantile_ignores_abstained_rows(self):
        part = decode_partition(3)
        scores = np.vstack([[1.0, 0.0], [0.0, 0.0], [0.3, 0.0], [0.9, 0.0]])
        labels = decode(scores, part, ("a", "b"), quantile=0.0)
        assert len(labels) == 2

    def test_threshold_monotone(self):
        rng = np.random.default_rng(53)
        part = decode_partition(20)
        scores = np.vstack([np.eye(1, 3)[0], rng.random((20, 3))])
        for g1, g2 in ((0.2, 0.5), (0.34, 0.35), (0.0, 1.0)):
            low = {l.candidate for l in decode(scores, part, ("a", "b", "c"), threshold=g1)}
            high = {l.candidate for l in decode(scores, part, ("a", "b", "c"), threshold=g2)}
            assert high <= low

    def test_emitted_confidence_at_least_uniform(self):
        rng = np.random.default_rng(59)
        part = decode_partition(50)
        scores = np.vstack([np.eye(1, 4)[0], rng.random((50, 4))])
        labels = decode(scores, part, ("a", "b", "c", "d"), threshold=0.0)
        assert all(l.confidence >= 1 / 4 for l in labels)

    def test_shape_guards(self):
        part = decode_partition(1)
        with pytest.raises(ValidationError, match="node partition"):
            decode(np.zeros((5, 2)), part, ("a", "b"))
        with pytest.raises(ValidationError, match="class catalog"):
            decode(np.zeros((2, 3)), part, ("a", "b"))
        with pytest.raises(ValidationError, match="quantile"):
            decode(np.zeros((2, 2)), part, ("a", "b"), quantile=1.5)
