# -*- coding: utf-8 -*-
"""A test unit for trace files
"""

import os
import tempfile
import unittest
import numpy as np

from pyltm.data.trace import (BITPACKED, FLOAT64, labels_path, load_labels, load_trace, save_labels, save_trace,
                              trace_from_bytes, trace_to_bytes)
from pyltm.utils.errors import TraceFormatError


class TestTrace(unittest.TestCase):
    def setUp(self) -> None:
        rng = np.random.default_rng(0)
        self.bits = rng.integers(0, 2, size=(13, 10)).astype(np.float64)
        self.folder = tempfile.TemporaryDirectory()

    def test_bitpacked(self):
        data = trace_to_bytes(self.bits)
        assert data[18] == BITPACKED
        assert len(data) == 19 + 4 + (13 * 10 + 7) // 8
        assert np.array_equal(trace_from_bytes(data), self.bits)

    def test_actions(self):
        frames = np.concatenate([self.bits, np.full((13, 2), 0.25)], axis=1)
        restored = trace_from_bytes(trace_to_bytes(frames, n_actions=2))
        assert np.array_equal(restored, frames)

    def test_float(self):
        frames = self.bits * 0.5
        data = trace_to_bytes(frames)
        assert data[18] == FLOAT64
        assert np.array_equal(trace_from_bytes(data), frames)
        assert np.array_equal(trace_from_bytes(trace_to_bytes(self.bits, encoding=FLOAT64)), self.bits)
        with self.assertRaises(ValueError):
            trace_to_bytes(frames, encoding=BITPACKED)
        with self.assertRaises(ValueError):
            trace_to_bytes(frames, encoding=7)
        with self.assertRaises(ValueError):
            trace_to_bytes(frames, n_actions=11)

    def test_malformed(self):
        data = trace_to_bytes(self.bits)
        for broken in (b"LTMX" + data[4:], data[:4] + b"\x02\x00" + data[6:], data[:-1], data + b"\x00",
                       data[:18] + b"\x05" + data[19:]):
            with self.assertRaises(TraceFormatError):
                trace_from_bytes(broken)

    def test_files(self):
        path = os.path.join(self.folder.name, "stream.ltmt")
        save_trace(self.bits, path)
        assert np.array_equal(load_trace(path), self.bits)
        labels = ["counter"] * 6 + ["periodic"] * 7
        save_labels(labels, labels_path(path))
        assert labels_path(path) == path + ".labels"
        assert load_labels(labels_path(path)) == labels

    def tearDown(self) -> None:
        self.folder.cleanup()


if __name__ == "__main__":
    unittest.main()
