# -*- coding: utf-8 -*-
"""A test unit for the proximity index
"""

import unittest
import numpy as np

from pyltm.memory.index import DistanceEntry, ProximityIndex

try:
    from sklearn.neighbors import NearestNeighbors
except ImportError:  # pragma: no cover
    NearestNeighbors = None


class TestProximityIndex(unittest.TestCase):
    def setUp(self) -> None:
        rng = np.random.default_rng(0)
        self.vectors = rng.standard_normal((600, 64))
        self.index = ProximityIndex(max_degree=8, ef_construction=64, ef_search=64, seed=3)
        for i, vector in enumerate(self.vectors):
            self.index.add(i, vector)

    def test_exact_neighbour(self):
        hits = self.index.search(self.vectors[17], 1)
        assert hits == [DistanceEntry(0.0, 17)]

    def test_sorted_results(self):
        hits = self.index.search(np.zeros(64), 10)
        assert len(hits) == 10
        assert [h.distance for h in hits] == sorted(h.distance for h in hits)

    @unittest.skipIf(NearestNeighbors is None, "scikit-learn is not installed")
    def test_recall_against_brute_force(self):
        queries = np.random.default_rng(1).standard_normal((50, 64))
        oracle = NearestNeighbors(n_neighbors=10).fit(self.vectors)
        _, truth = oracle.kneighbors(queries)
        found = 0
        for query, expected in zip(queries, truth):
            found += len({h.index for h in self.index.search(query, 10)} & set(expected.tolist()))
        assert found / truth.size >= 0.9

    def test_remove(self):
        assert self.index.remove(17)
        assert not self.index.remove(17)
        assert not self.index.remove(10 ** 6)
        assert 17 not in self.index
        assert len(self.index) == 599
        assert all(h.index != 17 for h in self.index.search(self.vectors[17], 5))
        assert self.index.stats()["deleted"] == 1

    def test_duplicate_id(self):
        with self.assertRaises(ValueError):
            self.index.add(3, np.zeros(64))

    def test_degree_cap(self):
        for layer, graph in enumerate(self.index.layers):
            cap = 16 if layer == 0 else 8
            assert max(d for _, d in graph.degree()) <= cap

    def test_empty(self):
        index = ProximityIndex()
        assert index.search(np.zeros(64), 3) == []
        index.add(0, np.ones(64))
        index.remove(0)
        assert index.search(np.zeros(64), 3) == []
        assert index.search(np.zeros(64), 0) == []

    def test_deterministic(self):
        other = ProximityIndex(max_degree=8, ef_construction=64, ef_search=64, seed=3)
        for i, vector in enumerate(self.vectors):
            other.add(i, vector)
        assert [sorted(g.edges()) for g in other.layers] == [sorted(g.edges()) for g in self.index.layers]

    def test_invalid_degree(self):
        with self.assertRaises(ValueError):
            ProximityIndex(max_degree=1)

    def tearDown(self) -> None:
        pass


if __name__ == "__main__":
    unittest.main()
