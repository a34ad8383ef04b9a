import numpy as np
import pytest

import helpers
from jointprop import ValidationError
from jointprop.graph import STAGE_NORMALIZED, build_normalized_graph
from jointprop.oracle import dense_affinity, knn_reference, propagate_reference
from jointprop.propagate import propagate_iterative


class TestDenseAffinity:
    def test_identical_points(self):
        feats = np.zeros((3, 2))
        out = dense_affinity(feats, sigma=1.0)
        np.testing.assert_array_equal(out, 1.0 - np.eye(3))

    def test_single_point_allowed(self):
        out = dense_affinity(np.zeros((1, 4)), sigma=1.0)
        assert np.array_equal(out, np.zeros((1, 1)))

    def test_size_guard(self):
        with pytest.raises(ValidationError, match="limited to 2000 nodes"):
            dense_affinity(np.zeros((2001, 1)), sigma=1.0)

    def test_bad_sigma(self):
        with pytest.raises(ValidationError):
            dense_affinity(np.zeros((2, 1)), sigma=-1.0)


class TestKnnReference:
    def test_equidistant_ties_pick_lowest_index(self):
        out = knn_reference(np.eye(3), k=1)
        assert out == [[1], [0], [0]]

    def test_k_covers_all_others(self):
        rng = np.random.default_rng(0)
        out = knn_reference(rng.standard_normal((6, 2)), k=5)
        for a, nbrs in enumerate(out):
            assert sorted(nbrs) == [b for b in range(6) if b != a]

    def test_k_clamped(self):
        out = knn_reference(np.eye(3), k=99)
        assert all(len(n) == 2 for n in out)


class TestPropagateReference:
    def s_and_z(self):
        s = np.array([[0.0, 1.0], [1.0, 0.0]])
        z = np.array([[1.0, 0.0], [0.0, 0.0]])
        return s, z

    def test_one_term_is_the_seed_matrix(self):
        s, z = self.s_and_z()
        np.testing.assert_array_equal(propagate_reference(s, z, c=0.5, terms=1), z)

    def test_two_node_series_limit(self):
        s, z = self.s_and_z()
        got = propagate_reference(s, z, c=0.5, terms=200)
        np.testing.assert_allclose(got, [[2 / 3, 0], [1 / 3, 0]], atol=1e-10)

    def test_matches_iterative_on_random_instances(self):
        rng = np.random.default_rng(19)
        for _ in range(10):
            t = int(rng.integers(5, 40))
            graph = build_normalized_graph(rng.standard_normal((t, 3)), k=3, sigma=2.0)
            u = int(rng.integers(2, 5))
            z = np.zeros((t, u))
            for row in range(max(1, t // 4)):
                z[row, int(rng.integers(0, u))] = 1.0
            c = 0.9
            result = propagate_iterative(graph, z, c=c, tol=1e-13, max_iters=5000)
            series = propagate_reference(graph.to_dense(), z, c=c, terms=400)
            np.testing.assert_allclose(result.scores, series, atol=1e-8)

    def test_input_validation(self):
        s, z = self.s_and_z()
        with pytest.raises(ValidationError, match="square"):
            propagate_reference(np.zeros((2, 3)), z, 0.5, 5)
        with pytest.raises(ValidationError, match="one row per node"):
            propagate_reference(s, np.zeros((3, 2)), 0.5, 5)
        with pytest.raises(ValidationError, match="c must be"):
            propagate_reference(s, z, 1.0, 5)
        with pytest.raises(ValidationError, match="terms"):
            propagate_reference(s, z, 0.5, 0)
