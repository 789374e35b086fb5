# -*- coding: utf-8 -*-
"""A test unit for continuation calls
"""

import unittest
from unittest import mock
import numpy as np

from pyltm.data.generators import DomainSpec, generate
from pyltm.models.continuation import ContinuationCoder
from pyltm.models.lifelong import EncodedCall
from pyltm.utils.errors import DepthLimitError


class TestContinuationCoder(unittest.TestCase):
    def setUp(self) -> None:
        self.coder = ContinuationCoder(n_bits=8, window=4, hidden=8, n_programs=2, density=0.01,
                                       batch_size=4, seed=2)
        self.sequence = generate(DomainSpec("c", "counter", n_bits=8), 8)

    def test_widths(self):
        assert self.coder.inner_width == 65
        lifted = self.coder.lift(self.sequence)
        assert lifted.shape == (8, 65)
        assert not lifted[:, 8:].any()

    def test_spans(self):
        assert self.coder.spans(8) == [(0, 4), (4, 4)]
        assert self.coder.spans(11) == [(0, 7), (7, 4)]
        assert self.coder.spans(14) == [(0, 6), (6, 4), (10, 4)]
        assert self.coder.spans(5) == [(0, 5)]
        with self.assertRaises(ValueError):
            self.coder.spans(0)

    def test_call_pair(self):
        embedding = np.zeros(64)
        thought = np.array([-1.0, 0.0, 1.0])
        pair = self.coder.call_pair(embedding, thought)
        assert pair.shape == (2, 65)
        assert np.all(pair[:, -1] == 1.0)
        assert np.allclose(pair[0, :64], 0.5)
        assert pair[1, :3].tolist() == [0.0, 0.5, 1.0]
        assert not self.coder.stop_pair().any()

    def test_chain(self):
        calls = self.coder.encode_continuation(self.sequence)
        assert [c.span for c in calls] == [(0, 4), (4, 4)]
        assert calls[0].target_length == 6
        assert calls[0].thought.shape == (8,)
        targets = self.coder.targets(self.sequence)
        assert targets[0].shape == (6, 65)
        assert np.all(targets[0][4:, -1] == 1.0)
        assert not targets[1][4:].any()
        assert np.array_equal(targets[1][:4, :8], self.sequence[4:])

    def test_resolve_program(self):
        bank = self.coder._ensure()
        values = self.coder.call_pair(bank.programs_[1].embedding, np.zeros(8))[0]
        assert self.coder.resolve_program(values) == 1

    def test_stop_tag_ends_chain(self):
        bank = self.coder._ensure()
        call = EncodedCall(0, np.zeros(8), (0, 4), 6)
        with mock.patch.object(bank, "decode", return_value=np.zeros((1, 6, 65))):
            out = self.coder.decode_continuation(call)
        assert out.shape == (4, 8)

    def test_depth_limit(self):
        bank = self.coder._ensure()
        call = EncodedCall(0, np.zeros(8), (0, 4), 6)
        with mock.patch.object(bank, "decode", return_value=np.ones((1, 6, 65))) as decode:
            with self.assertRaises(DepthLimitError):
                self.coder.decode_continuation(call, max_depth=3)
            assert decode.call_count == 3
        with self.assertRaises(ValueError):
            self.coder.decode_continuation(call, max_depth=0)

    def test_fit(self):
        other = generate(DomainSpec("s", "shift_register", n_bits=8), 8)
        self.coder.fit([self.sequence, other], epochs=1, steps=2)
        assert self.coder.bank_.step_ == 2
        assert self.coder.decision_function([self.sequence[:4], other[:4]]).shape == (2,)

    def tearDown(self) -> None:
        pass


if __name__ == "__main__":
    unittest.main()
