# -*- coding: utf-8 -*-
"""A test unit for the Adam optimizer
"""

import unittest
import numpy as np

from pyltm.numeric.optim import OptimizerState, clip_by_global_norm, optimizer_step
from pyltm.utils.errors import NonFiniteError, ShapeError


class TestOptimizer(unittest.TestCase):
    def setUp(self) -> None:
        self.params = {"a": np.array([1.0, -2.0]), "b": np.array([[0.5]])}
        self.state = OptimizerState(learning_rate=0.1, clip_norm=None)

    def test_first_step_moves_by_learning_rate(self):
        params, state = optimizer_step(self.params, {"a": np.array([0.3, -4.0])}, self.state)
        assert np.allclose(params["a"], [0.9, -1.9], atol=1e-6)
        assert state.step == 1
        assert state.block_steps == {"a": 1}

    def test_absent_blocks_are_untouched(self):
        params, state = optimizer_step(self.params, {"a": np.ones(2)}, self.state)
        assert params["b"] is self.params["b"]
        assert "b" not in state.first

    def test_non_finite_gradient(self):
        before = self.params["a"].copy()
        with self.assertRaises(NonFiniteError) as context:
            optimizer_step(self.params, {"a": np.array([np.nan, 0.0])}, self.state)
        assert "'a'" in str(context.exception)
        assert np.array_equal(self.params["a"], before)
        assert self.state.step == 0

    def test_shape_checks(self):
        with self.assertRaises(ShapeError):
            optimizer_step(self.params, {"a": np.ones(3)}, self.state)
        with self.assertRaises(ShapeError):
            optimizer_step(self.params, {"c": np.ones(2)}, self.state)

    def test_global_norm_clipping(self):
        clipped, norm = clip_by_global_norm({"a": np.array([3.0, 0.0]), "b": np.array([4.0])}, 1.0)
        assert norm == 5.0
        assert np.allclose(clipped["a"], [0.6, 0.0])
        assert np.allclose(clipped["b"], [0.8])
        unchanged, _ = clip_by_global_norm({"a": np.array([0.1])}, 1.0)
        assert unchanged["a"][0] == 0.1

    def test_copy_is_independent(self):
        _, state = optimizer_step(self.params, {"a": np.ones(2)}, self.state)
        copy = state.copy()
        copy.first["a"][0] = 99.0
        assert state.first["a"][0] != 99.0

    def tearDown(self) -> None:
        pass


if __name__ == "__main__":
    unittest.main()
