# -*- coding: utf-8 -*-
"""A test unit for the stretcher hypernetwork
"""

import unittest
import numpy as np

from pyltm.models.bank import ProgramBank
from pyltm.models.seqae import param_layout
from pyltm.models.stretcher import (PROGRAM_WIDTH, ProgramVector, init_stretcher, sample_program, stretch,
                                    stretch_flat, stretch_nodes)
from pyltm.numeric.autodiff import Graph
from pyltm.utils.errors import ShapeError


class TestStretcher(unittest.TestCase):
    def setUp(self) -> None:
        self.layout = param_layout(6, 4)
        self.sp = init_stretcher(5, self.layout.size, density=0.05)

    def test_output_length(self):
        params = stretch(sample_program(5, 0), self.sp, self.layout)
        assert params.flat.shape == (self.layout.size,)
        assert self.sp.sparse.nnz == round(0.05 * self.layout.size * 256)

    def test_layout_mismatch(self):
        with self.assertRaises(ShapeError):
            stretch(sample_program(5, 0), self.sp, param_layout(6, 5))
        with self.assertRaises(ShapeError):
            ProgramVector(0, np.zeros(PROGRAM_WIDTH - 1))

    def test_deterministic(self):
        again = init_stretcher(5, self.layout.size, density=0.05)
        embedding = sample_program(5, 1).embedding
        assert np.array_equal(stretch_flat(embedding, again), stretch_flat(embedding, self.sp))
        assert not np.array_equal(sample_program(5, 0).embedding, sample_program(5, 1).embedding)

    def test_batched_stretch_matches_single(self):
        embeddings = np.stack([sample_program(5, i).embedding for i in range(3)])
        batched = stretch_flat(embeddings, self.sp)
        for i in range(3):
            assert np.allclose(batched[i], stretch_flat(embeddings[i], self.sp))

    def test_nodes_match_numpy(self):
        graph = Graph()
        leaves = {name: graph.leaf(value, name=name) for name, value in self.sp.blocks().items()}
        embeddings = np.stack([sample_program(5, i).embedding for i in range(2)])
        out = stretch_nodes(graph, leaves, self.sp, graph.constant(embeddings))
        assert np.allclose(out.value, stretch_flat(embeddings, self.sp))

    def test_end_to_end_gradient(self):
        bank = ProgramBank(n_bits=6, hidden=4, n_programs=1, density=0.1, seed=0).initialize()
        windows = np.random.default_rng(2).integers(0, 2, size=(2, 3, 6)).astype(np.float64)

        def build(embedding, w4):
            graph = Graph()
            blocks = dict(bank.stretcher_.blocks(), w4=w4)
            leaves = {name: graph.leaf(value, name=f"stretcher.{name}") for name, value in blocks.items()}
            program = graph.leaf(embedding, name="program.0")
            flats = stretch_nodes(graph, leaves, bank.stretcher_, graph.stack([program]))
            loss = graph.mean(bank._loss_nodes(graph, flats, windows, windows, [0], teacher=True)[0])
            return graph, loss

        embedding = bank.programs_[0].embedding
        w4 = bank.stretcher_.sparse.weights
        graph, loss = build(embedding, w4)
        grads = graph.backward(loss)

        def check(analytic, numeric):
            assert abs(analytic - numeric) <= 1e-4 * max(abs(analytic), abs(numeric)) + 1e-9

        eps = 1e-6
        for i in range(0, PROGRAM_WIDTH, 9):
            plus, minus = embedding.copy(), embedding.copy()
            plus[i] += eps
            minus[i] -= eps
            numeric = (float(build(plus, w4)[1].value) - float(build(minus, w4)[1].value)) / (2 * eps)
            check(grads["program.0"][i], numeric)
        for i in range(0, w4.size, max(1, w4.size // 8)):
            plus, minus = w4.copy(), w4.copy()
            plus[i] += eps
            minus[i] -= eps
            numeric = (float(build(embedding, plus)[1].value) - float(build(embedding, minus)[1].value)) / (2 * eps)
            check(grads["stretcher.w4"][i], numeric)

    def tearDown(self) -> None:
        pass


if __name__ == "__main__":
    unittest.main()
