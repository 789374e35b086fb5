# -*- coding: utf-8 -*-
"""A test unit for the program bank
"""

import io
import unittest
import numpy as np

from pyltm.config import GrowthPolicy
from pyltm.data.generators import DomainSpec, generate
from pyltm.models.bank import ProgramBank
from pyltm.models.stretcher import PROGRAM_WIDTH
from pyltm.utils.errors import NonFiniteError, ShapeError


def counter_windows(n_windows=16, length=4, n_bits=8):
    frames = generate(DomainSpec("c", "counter", n_bits=n_bits), n_windows * length)
    return frames.reshape(n_windows, length, n_bits)


class TestProgramBank(unittest.TestCase):
    def setUp(self) -> None:
        self.bank = ProgramBank(n_bits=8, hidden=8, n_programs=3, density=0.05, batch_size=8, seed=1).initialize()
        self.windows = counter_windows()

    def test_parameters(self):
        assert len(self.bank.programs_) == 3
        assert self.bank.layout_.size == self.bank.stretcher_.size
        assert self.bank.step_ == 0
        assert repr(self.bank) == "ProgramBank(3 programs)"

    def test_route_shapes_and_ties(self):
        losses = self.bank.window_losses(self.windows)
        assert losses.shape == (16, 3)
        routes = self.bank.route(self.windows[:2])
        assert routes[0].program == int(np.argmin(routes[0].losses))
        self.bank.programs_[2].embedding = self.bank.programs_[0].embedding.copy()
        self.bank.programs_[1].embedding = self.bank.programs_[0].embedding.copy()
        assert set(self.bank.decision_function(self.windows)) == {0}

    def test_wrong_width(self):
        with self.assertRaises(ShapeError):
            self.bank.window_losses(np.zeros((2, 4, 7)))

    def test_min_tying_isolation(self):
        before = [p.embedding.copy() for p in self.bank.programs_]
        result = self.bank.train_step(self.windows[:8], program_ids=[1])
        assert result["usage"] == {1: 8}
        assert np.array_equal(self.bank.programs_[0].embedding, before[0])
        assert np.array_equal(self.bank.programs_[2].embedding, before[2])
        assert not np.array_equal(self.bank.programs_[1].embedding, before[1])
        assert "program.0" not in self.bank.optimizer_.first

    def test_unrouted_programs_are_untouched(self):
        before = [p.embedding.copy() for p in self.bank.programs_]
        result = self.bank.train_step(self.windows[:8])
        assert sum(result["usage"].values()) == 8
        for pid in range(3):
            if pid not in result["usage"]:
                assert np.array_equal(self.bank.programs_[pid].embedding, before[pid])

    def test_training_lowers_loss(self):
        before = self.bank.mean_min_loss(self.windows)
        self.bank.fit(self.windows, steps=40)
        assert len(self.bank.history_) == 40
        assert self.bank.mean_min_loss(self.windows) < before
        assert sum(self.bank.usage_.values()) == 40 * 8

    def test_non_finite_loss(self):
        self.bank.programs_[0].embedding = np.full(PROGRAM_WIDTH, np.nan)
        with self.assertRaises(NonFiniteError):
            self.bank.train_step(self.windows[:4])
        assert self.bank.step_ == 0

    def test_empty_batch(self):
        with self.assertRaises(ValueError):
            self.bank.train_step(np.zeros((0, 4, 8)))

    def test_encode_decode(self):
        ids, thoughts = self.bank.encode(self.windows[:5])
        assert ids.shape == (5,)
        assert thoughts.shape == (5, 8)
        frames = self.bank.decode(thoughts, ids, 6)
        assert frames.shape == (5, 6, 8)
        assert np.all((frames > 0.0) & (frames < 1.0))

    def test_usage_matrix(self):
        labels = ["a"] * 8 + ["b"] * 8
        usage = self.bank.usage_matrix(self.windows, labels)
        assert usage.domains == ["a", "b"]
        assert usage.counts.sum() == 16
        assert set(usage.assignment) <= {"a", "b"}
        assert len(set(usage.assignment.values())) == len(usage.assignment)
        buffer = io.StringIO()
        usage.write_csv(buffer)
        assert buffer.getvalue().splitlines()[0] == "domain,program,count"
        assert len(buffer.getvalue().splitlines()) == 1 + 2 * 3

    def test_growth_stops_when_programs_cannot_pay(self):
        policy = GrowthPolicy(cost_per_program=1e9, max_programs=5)
        report = self.bank.grow(self.windows, policy, plateau=False)
        assert report.accepted == []
        assert len(self.bank.programs_) == 3

    def test_rejected_candidate_is_rolled_back(self):
        base = self.bank.mean_min_loss(self.windows)
        size = self.windows.shape[0] * self.windows.shape[1]
        policy = GrowthPolicy(cost_per_program=0.999999 * base * size, max_programs=5, trial_steps=3)
        before = [p.embedding.copy() for p in self.bank.programs_]
        stretcher = self.bank.stretcher_.sparse.weights.copy()
        report = self.bank.grow(self.windows, policy, plateau=False)
        assert report.accepted == []
        assert report.rejected_gain is not None
        assert len(self.bank.programs_) == 3
        assert self.bank.step_ == 0
        assert np.array_equal(self.bank.stretcher_.sparse.weights, stretcher)
        for program, embedding in zip(self.bank.programs_, before):
            assert np.array_equal(program.embedding, embedding)

    def test_trainable_limits_updated_embeddings(self):
        before = [p.embedding.copy() for p in self.bank.programs_]
        metrics = self.bank.train_step(self.windows[:8], trainable=[2])
        for program, embedding in zip(self.bank.programs_, before):
            moved = not np.array_equal(program.embedding, embedding)
            assert moved == (program.id == 2 and 2 in metrics["usage"])

    def test_growth_trial_keeps_older_embeddings(self):
        bank = ProgramBank(n_bits=8, hidden=8, n_programs=2, density=0.05, batch_size=8, seed=1).initialize()
        for program in bank.programs_:
            program.key = bank.program_key(program.id)
        before = [p.embedding.copy() for p in bank.programs_]
        policy = GrowthPolicy(cost_per_program=0.0, max_programs=3, trial_steps=5)
        report = bank.grow(self.windows, policy, plateau=False)
        assert report.accepted == [2]
        assert len(bank.programs_) == 3
        for program, embedding in zip(bank.programs_[:2], before):
            assert np.array_equal(program.embedding, embedding)
        assert np.array_equal(bank.programs_[2].key, bank.program_key(2))

    def test_grown_program_has_no_key_without_keyed_siblings(self):
        bank = ProgramBank(n_bits=8, hidden=8, n_programs=2, density=0.05, batch_size=8, seed=1).initialize()
        bank.grow(self.windows, GrowthPolicy(cost_per_program=0.0, max_programs=3, trial_steps=5), plateau=False)
        assert all(p.key is None for p in bank.programs_)

    def test_plateau(self):
        policy = GrowthPolicy(plateau_steps=2, plateau_eps=10.0, max_plateau_steps=50)
        assert self.bank.train_to_plateau(self.windows, policy) == 4

    def test_round_trip_continues_identically(self):
        self.bank.fit(self.windows, steps=3)
        copy = ProgramBank.from_bytes(self.bank.to_bytes())
        assert copy.to_bytes() == self.bank.to_bytes()
        assert np.array_equal(copy.window_losses(self.windows), self.bank.window_losses(self.windows))
        self.bank.fit(self.windows, steps=2)
        copy.fit(self.windows, steps=2)
        assert self.bank.history_ == copy.history_
        assert np.array_equal(copy.programs_[0].embedding, self.bank.programs_[0].embedding)

    def tearDown(self) -> None:
        pass


if __name__ == "__main__":
    unittest.main()
