# -*- coding: utf-8 -*-
"""Desk-scale experiments; they take minutes, so they only run when
PYLTM_SLOW=1 is set.
"""

import os
import time
import unittest
import numpy as np

from pyltm.config import GrowthPolicy
from pyltm.data.generators import DomainSpec, compose, default_domains, default_script, generate
from pyltm.memory.index import ProximityIndex
from pyltm.memory.records import Program
from pyltm.memory.vmem import VectorMemory
from pyltm.models.bank import ProgramBank
from pyltm.models.continuation import ContinuationCoder
from pyltm.models.explain import ExplainAwayEncoder
from pyltm.models.keyclass import KeyClassifier
from pyltm.models.lifelong import LifelongLearner
from pyltm.utils.converter import bit_accuracy

SLOW = os.environ.get("PYLTM_SLOW") == "1"


def windows_of(frames, length):
    count = len(frames) // length
    return frames[:count * length].reshape(count, length, frames.shape[1])


def reconstruction_accuracy(bank, windows):
    ids, thoughts = bank.encode(windows)
    return bit_accuracy(windows, bank.decode(thoughts, ids, windows.shape[1]), bank.n_bits)


@unittest.skipUnless(SLOW, "set PYLTM_SLOW=1 to run desk-scale experiments")
class TestDeskScale(unittest.TestCase):
    def setUp(self) -> None:
        self.stream = compose(default_script(default_domains(32)))
        self.windows = windows_of(self.stream.frames, 7)
        self.labels = [self.stream.names[i] for i in self.stream.labels.reshape(-1, 7)[:, 0]]

    def test_domain_specialization(self):
        bank = ProgramBank(n_bits=32, hidden=16, n_programs=3, seed=0).fit(self.windows, steps=1500)
        usage = bank.usage_matrix(self.windows, self.labels)
        assert usage.is_bijection
        assert min(usage.modal_mass.values()) >= 0.9

    def test_growth_finds_the_third_domain(self):
        bank = ProgramBank(n_bits=32, hidden=16, n_programs=2, seed=0).initialize()
        report = bank.grow(self.windows, GrowthPolicy(max_programs=4))
        assert len(bank.programs_) == 3
        assert all(b < a for a, b in zip(report.losses, report.losses[1:]))

    def test_retrieval_finds_the_routed_program(self):
        bank = ProgramBank(n_bits=32, hidden=16, n_programs=64, seed=0).fit(self.windows, steps=300)
        clf = KeyClassifier(n_bits=32, hidden=32, epochs=30, seed=0).fit(self.windows, bank=bank)
        memory = VectorMemory(seed=0)
        KeyClassifier.write_program_keys(bank, memory)
        sample = self.windows[::9]
        routed = bank.decision_function(sample)
        hits = sum(int(pid) in clf.retrieve_programs(w, memory, 4) for w, pid in zip(sample, routed))
        assert hits / len(sample) >= 0.85


@unittest.skipUnless(SLOW, "set PYLTM_SLOW=1 to run desk-scale experiments")
class TestMemoryScale(unittest.TestCase):
    def test_recall_against_linear_scan(self):
        rng = np.random.default_rng(0)
        memory = VectorMemory(seed=0)
        for key in rng.standard_normal((10000, 64)):
            memory.write(key, Program(0))
        top1 = top10 = 0
        queries = rng.standard_normal((1000, 64))
        for query in queries:
            found = [h.record.id for h in memory.read(query, 10)]
            exact = [h.record.id for h in memory.read_exact(query, 10)]
            top1 += found[0] == exact[0]
            top10 += len(set(found) & set(exact))
        assert top1 / len(queries) >= 0.95
        assert top10 / (10 * len(queries)) >= 0.90

    def test_latency_grows_sublinearly(self):
        counts = (1000, 3000, 10000, 30000, 100000)
        rng = np.random.default_rng(2)
        memory = VectorMemory(seed=0)
        queries = rng.standard_normal((100, 64))
        insert, query = [], []
        for count in counts:
            keys = rng.standard_normal((count - memory.count(), 64))
            for key in keys[:-500]:
                memory.write(key, Program(0))
            start = time.perf_counter()
            for key in keys[-500:]:
                memory.write(key, Program(0))
            insert.append((time.perf_counter() - start) / 500)
            start = time.perf_counter()
            for key in queries:
                memory.read(key, 10)
            query.append((time.perf_counter() - start) / len(queries))
        assert memory.count() == counts[-1]
        # log-log slope of latency against record count
        assert np.polyfit(np.log(counts), np.log(insert), 1)[0] < 0.5
        assert np.polyfit(np.log(counts), np.log(query), 1)[0] < 0.5

    def test_index_degree_stays_bounded(self):
        index = ProximityIndex(seed=0)
        for i, key in enumerate(np.random.default_rng(1).standard_normal((5000, 64))):
            index.add(i, key)
        assert index.stats()["mean_degree"] <= 32


@unittest.skipUnless(SLOW, "set PYLTM_SLOW=1 to run desk-scale experiments")
class TestLifelongScale(unittest.TestCase):
    def learner(self, replay_ratio):
        bank = ProgramBank(n_bits=16, hidden=16, n_programs=2, seed=0)
        return LifelongLearner(bank, VectorMemory(seed=0), window=7, buffer_capacity=700, steps=300,
                               replay_ratio=replay_ratio, seed=0)

    def test_replay_limits_interference(self):
        a = generate(DomainSpec("a", "counter", n_bits=16), 2800)
        b = generate(DomainSpec("b", "periodic", n_bits=16, params={"offset": 8}), 2800, seed=1)
        retained = {}
        for ratio in (0.3, 0.0):
            learner = self.learner(ratio).fit(a)
            assert reconstruction_accuracy(learner.bank, windows_of(a, 7)) >= 0.99
            learner.fit(b)
            retained[ratio] = reconstruction_accuracy(learner.bank, windows_of(a, 7))
        assert retained[0.3] >= 0.95
        assert retained[0.0] < retained[0.3]

    def test_prediction_on_counter(self):
        frames = generate(DomainSpec("c", "counter", n_bits=8), 2800)
        learner = LifelongLearner(ProgramBank(n_bits=8, hidden=16, n_programs=1, seed=0), VectorMemory(seed=0),
                                  window=7, buffer_capacity=1400, steps=500, seed=0).fit(frames)
        held_out = generate(DomainSpec("c", "counter", n_bits=8, params={"start": 2800}), 700)
        windows = windows_of(held_out, 7)
        predicted = np.stack([learner.predict_next(w, k=1) for w in windows[:-1]])
        assert bit_accuracy(windows[1:], predicted, 8) >= 0.99

    def test_continuation_round_trip(self):
        coder = ContinuationCoder(n_bits=8, window=4, hidden=16, n_programs=2, seed=0)
        sequences = [generate(DomainSpec("c", "counter", n_bits=8, params={"start": s}), 8) for s in range(0, 64, 8)]
        coder.fit(sequences, epochs=20, steps=100)
        accuracy = [bit_accuracy(s, coder.decode_continuation(coder.encode_continuation(s)[0]), 8)
                    for s in sequences]
        assert np.mean(accuracy) >= 0.95

    def test_explain_away_composite(self):
        counter = DomainSpec("c", "counter", n_bits=16)
        periodic = DomainSpec("p", "periodic", n_bits=16, params={"offset": 8})
        bank = ProgramBank(n_bits=16, hidden=16, n_programs=2, seed=0).initialize()
        for pid, spec in enumerate((counter, periodic)):
            windows = windows_of(generate(spec, 1400), 7)
            for step in range(1500):
                rows = np.random.default_rng(step).choice(len(windows), size=32, replace=False)
                bank.train_step(windows[np.sort(rows)], program_ids=[pid])
        window = generate(counter, 7, seed=3) + generate(periodic, 7)
        encoder = ExplainAwayEncoder(bank)
        calls, residual = encoder.explain(window)
        assert len(calls) == 2
        assert np.mean(np.abs(residual)) < 0.1


if __name__ == "__main__":
    unittest.main()
