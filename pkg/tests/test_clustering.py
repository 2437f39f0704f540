from fractions import Fraction

import numpy as np
import pytest

from memescope.clustering import (Cluster, ClusterResult, DbscanParams,
                                  centroid, compute_centroids, dbscan,
                                  filter_clusters)
from oracles import quadratic_dbscan


def two_blobs(rng, n_per=10, sep=10.0):
    a = rng.normal(0.0, 0.3, size=(n_per, 3))
    b = rng.normal(sep, 0.3, size=(n_per, 3))
    return np.vstack([a, b])


class TestDbscan:
    def test_two_blobs_match_oracle(self, rng):
        points = two_blobs(rng)
        params = DbscanParams(eps=1.5, min_samples=3)
        result = dbscan(points, params)
        labels, core = quadratic_dbscan(points, 1.5, 3)
        assert np.array_equal(result.labels, labels)
        assert np.array_equal(result.core_positions, core)
        assert len(result.clusters) == 2
        assert result.noise_count == 0

    def test_isolated_point_is_noise(self):
        points = np.array([[0.0, 0.0]])
        result = dbscan(points, DbscanParams(eps=0.5, min_samples=2))
        assert result.labels.tolist() == [-1]
        assert result.noise_fraction == 1.0

    def test_min_samples_one_gives_connected_components(self, rng):
        points = np.array([[0.0], [0.4], [0.8], [5.0], [9.0]])
        result = dbscan(points, DbscanParams(eps=0.5, min_samples=1))
        assert result.noise_count == 0
        assert result.labels.tolist() == [0, 0, 0, 1, 2]

    def test_oracle_equivalence_random_corpora(self):
        for seed in range(8):
            r = np.random.default_rng(seed)
            n = int(r.integers(20, 200))
            dim = int(r.integers(2, 6))
            points = r.normal(0, 1, size=(n, dim))
            eps = float(r.uniform(0.2, 1.2))
            min_samples = int(r.integers(1, 6))
            result = dbscan(points, DbscanParams(eps=eps, min_samples=min_samples))
            labels, core = quadratic_dbscan(points, eps, min_samples)
            assert np.array_equal(result.labels, labels), f"seed {seed}"
            assert np.array_equal(result.core_positions, core), f"seed {seed}"

    def test_core_set_order_independent(self, rng):
        points = two_blobs(rng, n_per=15, sep=4.0)
        params = DbscanParams(eps=1.2, min_samples=4)
        base = dbscan(points, params)
        perm = rng.permutation(len(points))
        permuted = dbscan(points[perm], params)

        base_core = set(base.core_positions.tolist())
        perm_core = {int(perm[p]) for p in permuted.core_positions}
        assert base_core == perm_core

        # partition of core points agrees up to relabeling
        def core_partition(labels, positions, mapping=None):
            groups = {}
            for p in positions:
                orig = int(mapping[p]) if mapping is not None else int(p)
                groups.setdefault(int(labels[p]), set()).add(orig)
            return {frozenset(g) for g in groups.values()}

        assert core_partition(base.labels, base.core_positions) == \
            core_partition(permuted.labels, permuted.core_positions, perm)

    def test_fractions_sum_to_one_exactly(self, rng):
        points = np.vstack([two_blobs(rng), rng.normal(50, 0.1, size=(3, 3)),
                            [[100.0, 100.0, 100.0]]])
        result = dbscan(points, DbscanParams(eps=1.5, min_samples=3))
        n = len(result.labels)
        assert Fraction(result.noise_count, n) + \
            Fraction(n - result.noise_count, n) == 1
        assert result.noise_fraction + result.clustered_fraction == 1.0

    def test_deterministic(self, rng):
        points = rng.normal(0, 1, size=(120, 4))
        params = DbscanParams(eps=0.8, min_samples=3)
        a = dbscan(points, params)
        b = dbscan(points, params)
        assert np.array_equal(a.labels, b.labels)

    def test_member_ids_passthrough(self, rng):
        points = two_blobs(rng)
        ids = np.arange(100, 120)
        result = dbscan(points, DbscanParams(eps=1.5, min_samples=3), ids=ids)
        assert set(result.clusters[0].member_ids) == set(range(100, 110))

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            dbscan(np.ones((2, 2)), DbscanParams(eps=0.0, min_samples=1))
        with pytest.raises(ValueError):
            dbscan(np.ones((0, 2)), DbscanParams(eps=1.0, min_samples=1))


class TestFilterClusters:
    def _result(self, sizes):
        clusters = [Cluster(i, tuple(range(s))) for i, s in enumerate(sizes)]
        labels = np.concatenate([[i] * s for i, s in enumerate(sizes)])
        return ClusterResult(labels=labels, clusters=clusters,
                             core_positions=np.arange(0))

    def test_boundary_inclusive_at_30(self):
        kept = filter_clusters(self._result([45, 30, 29]))
        assert [c.size for c in kept] == [45, 30]

    def test_min_size_one_is_identity(self):
        result = self._result([5, 1, 3])
        assert filter_clusters(result, min_size=1) == result.clusters

    def test_all_small_gives_empty(self):
        assert filter_clusters(self._result([10, 5])) == []


class TestCentroid:
    def test_identical_members_exact(self):
        v = np.array([0.25, 0.5, 0.75])
        c = centroid(np.stack([v, v, v]))
        assert np.array_equal(c.vector, v)
        assert c.count == 3

    def test_orthonormal_pair_not_renormalized(self):
        c = centroid(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
        assert np.allclose(c.vector, [0.5, 0.5, 0.0])
        assert np.linalg.norm(c.vector) == pytest.approx(0.7071, abs=1e-4)

    def test_matches_mean_oracle(self, rng):
        members = rng.normal(3.0, 1.0, size=(40, 8))
        c = centroid(members)
        expected = members.sum(axis=0) / len(members)
        assert np.allclose(c.vector, expected, atol=1e-6)

    def test_unit_members_norm_at_most_one(self, rng):
        from conftest import random_unit_vectors
        members = random_unit_vectors(rng, 25, 8)
        c = centroid(members)
        assert np.linalg.norm(c.vector) <= 1.0 + 1e-12

    def test_compute_centroids_resolves_ids(self, rng):
        points = two_blobs(rng)
        result = dbscan(points, DbscanParams(eps=1.5, min_samples=3))
        centroids = compute_centroids(result.clusters, lambda m: points[m])
        assert len(centroids) == 2
        assert centroids[0].cluster_id == 0
        assert np.allclose(centroids[0].vector, points[:10].mean(axis=0))
