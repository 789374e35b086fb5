# -*- coding: utf-8 -*-
"""A test unit for the vector memory
"""

import os
import tempfile
import unittest
import numpy as np
from concurrent.futures import ThreadPoolExecutor

from pyltm.memory.records import Consequent, Episodic, PayloadKind, Program, thought_key
from pyltm.memory.vmem import VectorMemory
from pyltm.utils.errors import NonFiniteError, ShapeError, TraceFormatError


class TestVectorMemory(unittest.TestCase):
    def setUp(self) -> None:
        self.rng = np.random.default_rng(5)
        self.memory = VectorMemory(max_degree=8, ef_construction=32, ef_search=32, seed=1)
        self.keys = self.rng.standard_normal((40, 64))
        self.ids = [self.memory.write(key, Episodic(i % 3, key[:8], i, 4)) for i, key in enumerate(self.keys)]

    def test_exact_key_is_found(self):
        for i in (0, 13, 39):
            hits = self.memory.read(self.keys[i], 3)
            assert hits[0].record.id == self.ids[i]
            assert hits[0].distance == 0.0

    def test_duplicate_keys(self):
        extra = self.memory.write(self.keys[5], Program(2))
        hits = self.memory.read(self.keys[5], 2)
        assert [h.record.id for h in hits] == [self.ids[5], extra]
        assert len(self.memory) == 41

    def test_kind_filter(self):
        pid = self.memory.write(self.keys[7], Program(1))
        hits = self.memory.read(self.keys[7], 5, kind=PayloadKind.PROGRAM)
        assert [h.record.id for h in hits] == [pid]
        assert self.memory.count(PayloadKind.PROGRAM) == 1
        assert self.memory.count(PayloadKind.EPISODIC) == 40
        assert self.memory.read(self.keys[7], 5, kind=PayloadKind.CONSEQUENT) == []

    def test_delete_and_compaction(self):
        assert self.memory.delete(self.ids[3])
        assert not self.memory.delete(self.ids[3])
        assert self.ids[3] not in self.memory
        assert all(h.record.id != self.ids[3] for h in self.memory.read(self.keys[3], 5))
        for record_id in self.ids[4:20]:
            self.memory.delete(record_id)
        assert len(self.memory) == 23
        index = self.memory._indexes[PayloadKind.EPISODIC]
        assert len(index.deleted) < self.memory.compaction * len(index.vectors)
        assert self.memory.read(self.keys[30], 1)[0].record.id == self.ids[30]

    def test_bad_keys(self):
        with self.assertRaises(ShapeError):
            self.memory.write(np.zeros(63), Program(0))
        with self.assertRaises(NonFiniteError):
            self.memory.write(np.full(64, np.nan), Program(0))
        with self.assertRaises(ValueError):
            self.memory.read(self.keys[0], 0)
        assert len(self.memory) == 40

    def test_keys_are_copied(self):
        key = np.ones(64)
        record_id = self.memory.write(key, Program(0))
        key[:] = 0.0
        assert np.all(self.memory.get(record_id).key == 1.0)

    def test_read_exact(self):
        tied = self.memory.write(self.keys[0], Program(0))
        hits = self.memory.read_exact(self.keys[0], 2)
        assert [h.record.id for h in hits] == [self.ids[0], tied]
        distances = np.linalg.norm(self.keys - self.keys[9] * 0.5, axis=1)
        hits = self.memory.read_exact(self.keys[9] * 0.5, 4, kind=PayloadKind.EPISODIC)
        assert [h.record.id for h in hits] == [self.ids[i] for i in np.argsort(distances)[:4]]
        assert VectorMemory().read_exact(self.keys[0], 1) == []

    def test_approximate_agrees_with_exact(self):
        query = self.rng.standard_normal(64)
        approximate = [h.record.id for h in self.memory.read(query, 5)]
        exact = [h.record.id for h in self.memory.read_exact(query, 5)]
        assert len(set(approximate) & set(exact)) >= 4

    def test_round_trip(self):
        self.memory.write(thought_key(np.ones(8)), Consequent(np.ones(8), 2))
        self.memory.delete(self.ids[0])
        data = self.memory.to_bytes()
        copy = VectorMemory.from_bytes(data, max_degree=8, ef_construction=32, ef_search=32, seed=1)
        assert copy.to_bytes() == data
        assert copy.stats() == self.memory.stats()
        record = copy.get(self.ids[12])
        assert isinstance(record.value, Episodic)
        assert record.value.length == 4
        assert np.array_equal(record.value.thought, self.keys[12][:8])
        assert copy.write(np.zeros(64), Program(0)) == self.memory.write(np.zeros(64), Program(0))

    def test_file_round_trip(self):
        with tempfile.TemporaryDirectory() as folder:
            path = os.path.join(folder, "memory.vmem")
            self.memory.save(path)
            assert VectorMemory.load(path).to_bytes() == self.memory.to_bytes()

    def test_malformed_snapshots(self):
        data = self.memory.to_bytes()
        with self.assertRaises(TraceFormatError):
            VectorMemory.from_bytes(b"XMEM" + data[4:])
        with self.assertRaises(TraceFormatError):
            VectorMemory.from_bytes(data[:-3])
        with self.assertRaises(TraceFormatError):
            VectorMemory.from_bytes(data[:4] + b"\x09\x00" + data[6:])

    def test_replace_program_keys(self):
        first = self.memory.replace_program_keys({0: np.zeros(64), 1: np.ones(64)})
        second = self.memory.replace_program_keys({0: np.full(64, 2.0)})
        assert len(first) == 2 and len(second) == 1
        programs = list(self.memory.records(PayloadKind.PROGRAM))
        assert [r.value.program for r in programs] == [0]
        assert np.all(programs[0].key == 2.0)

    def test_concurrent_writes(self):
        keys = self.rng.standard_normal((64, 64))
        with ThreadPoolExecutor(max_workers=4) as pool:
            ids = list(pool.map(lambda key: self.memory.write(key, Program(0)), keys))
        assert len(set(ids)) == 64
        assert len(self.memory) == 104
        for record_id, key in zip(ids, keys):
            assert np.array_equal(self.memory.get(record_id).key, key)

    def test_thought_key(self):
        key = thought_key(np.arange(3.0))
        assert key.shape == (64,)
        assert key[:3].tolist() == [0.0, 1.0, 2.0]
        assert not key[3:].any()
        with self.assertRaises(ShapeError):
            thought_key(np.zeros(65))

    def tearDown(self) -> None:
        pass


if __name__ == "__main__":
    unittest.main()
