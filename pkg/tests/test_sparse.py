# -*- coding: utf-8 -*-
"""A test unit for the masked sparse layer
"""

import dataclasses
import unittest
import numpy as np

from pyltm.numeric.autodiff import Graph
from pyltm.numeric.sparse import SparseLinear, sparse_apply, sparse_linear
from pyltm.utils.errors import ShapeError


class TestSparseLinear(unittest.TestCase):
    def setUp(self) -> None:
        self.layer = SparseLinear.random(40, 16, 0.1, seed=7)
        self.x = np.random.default_rng(1).normal(size=(5, 16))

    def test_mask_size_and_determinism(self):
        assert self.layer.nnz == round(0.1 * 40 * 16)
        again = SparseLinear.random(40, 16, 0.1, seed=7)
        assert np.array_equal(again.mask_rows, self.layer.mask_rows)
        assert np.array_equal(again.weights, self.layer.weights)
        other = SparseLinear.random(40, 16, 0.1, seed=8)
        assert not np.array_equal(other.mask_rows * 16 + other.mask_cols,
                                  self.layer.mask_rows * 16 + self.layer.mask_cols)

    def test_apply_matches_dense(self):
        dense = self.layer.dense()
        assert np.allclose(sparse_apply(self.layer, self.x), self.x @ dense.T)
        assert np.allclose(sparse_apply(self.layer, self.x[0]), dense @ self.x[0])

    def test_mask_is_fixed(self):
        with self.assertRaises(ValueError):
            self.layer.mask_rows[0] = 3
        moved = dataclasses.replace(self.layer, weights=np.zeros(self.layer.nnz))
        assert np.array_equal(moved.mask_cols, self.layer.mask_cols)
        assert not np.any(sparse_apply(moved, self.x))

    def test_wrong_width(self):
        with self.assertRaises(ShapeError):
            sparse_apply(self.layer, np.zeros((2, 15)))

    def test_invalid_density(self):
        with self.assertRaises(ValueError):
            SparseLinear.random(4, 4, 0.0, seed=0)

    def test_gradients(self):
        graph = Graph()
        w = graph.leaf(self.layer.weights, name="w")
        x = graph.leaf(self.x, name="x")
        out = sparse_linear(graph, self.layer, w, x)
        grads = graph.backward(graph.sum(graph.mul(out, out)))
        dense = self.layer.dense()
        y = self.x @ dense.T
        full = 2.0 * y.T @ self.x
        assert np.allclose(grads["w"], full[self.layer.mask_rows, self.layer.mask_cols])
        assert np.allclose(grads["x"], 2.0 * y @ dense)

    def tearDown(self) -> None:
        pass


if __name__ == "__main__":
    unittest.main()
