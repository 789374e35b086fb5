# -*- coding: utf-8 -*-
"""Greedy explain-away encoding with a bank of expert programs.
"""
# License: BSD 2 clause

import logging
import numpy as np
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from pyltm.memory.records import Episodic, thought_key
from pyltm.memory.vmem import VectorMemory
from pyltm.models.bank import ProgramBank
from pyltm.models.base import BaseLearner
from pyltm.utils.converter import as_frames
from pyltm.utils.tools import make_rng

logger = logging.getLogger(__name__)


@dataclass
class ExpertCall(object):
    """One applied expert and the residual cost left after it."""

    program: int
    thought: np.ndarray
    residual_loss: float


def residual_loss(residual: np.ndarray) -> float:
    """Mean squared value of a residual window."""
    return float(np.mean(np.square(residual)))


class ExplainAwayEncoder(BaseLearner):
    """Explains a window as a sum of expert decodes.

    At every round each expert encodes the current residual; the expert
    whose decode, once subtracted, leaves the smallest residual loss is
    applied. Rounds stop when the best improvement falls below `eps` or
    after `max_calls` calls.

    Parameters
    ----------
    bank : ProgramBank
        The experts.
    eps : float, optional (default=1e-3)
    max_calls : int, optional (default=8)
    steps : int, optional (default=50)
        Training steps per expert and pass in :meth:`fit`.
    memory : VectorMemory, optional
        Where :meth:`store` writes call sequences.
    """

    def __init__(self, bank: ProgramBank, eps: float = 1e-3, max_calls: int = 8, steps: int = 50,
                 memory: Optional[VectorMemory] = None) -> None:
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.bank = bank
        self.eps = eps
        self.max_calls = max_calls
        self.steps = steps
        self.memory = memory
        self.passes_ = 0

    def explain(self, window) -> Tuple[List[ExpertCall], np.ndarray]:
        """Calls applied to `window` and the final residual."""
        bank = self.bank
        residual = as_frames(window, bank.width).copy()
        ids = np.arange(len(bank.programs_))
        calls: List[ExpertCall] = []
        current = residual_loss(residual)
        while len(calls) < self.max_calls:
            _, thoughts = bank.encode(np.repeat(residual[None], len(ids), axis=0), program_ids=ids)
            decodes = bank.decode(thoughts, ids, len(residual))
            costs = np.mean(np.square(residual[None] - decodes), axis=(1, 2))
            best = int(np.argmin(costs))
            if current - costs[best] < self.eps:
                break
            residual = residual - decodes[best]
            current = residual_loss(residual)
            calls.append(ExpertCall(best, thoughts[best], current))
            logger.debug("call %d: program %d, residual loss %.5f", len(calls), best, current)
        return calls, residual

    def explain_away_encode(self, window) -> List[ExpertCall]:
        """The (program, thought) calls that explain `window`, in order."""
        return self.explain(window)[0]

    def decision_function(self, windows) -> List[List[ExpertCall]]:
        return [self.explain_away_encode(w) for w in np.asarray(windows, dtype=np.float64)]

    def store(self, window, position: int = 0) -> List[int]:
        """Write the calls of `window` to memory as episodic records."""
        if self.memory is None:
            raise ValueError("no memory to store calls in")
        length = len(window)
        return [self.memory.write(thought_key(call.thought), Episodic(call.program, call.thought, position, length))
                for call in self.explain_away_encode(window)]

    def fit(self, data, passes: int = 1, **kwargs) -> "ExplainAwayEncoder":
        """Train every expert on the residuals it was called on.

        Each pass runs the greedy search over `data`; the residual an
        expert saw, clipped to [0, 1], becomes a training target for that
        expert alone.

        Parameters
        ----------
        data : ndarray of shape (n_windows, length, width)
        passes : int, optional (default=1)

        Returns
        -------
        self : object
        """
        self.bank._ensure()
        windows = np.asarray(data, dtype=np.float64)
        for _ in range(passes):
            targets: Dict[int, List[np.ndarray]] = {}
            for window in windows:
                residual = window.copy()
                for call in self.explain_away_encode(window):
                    targets.setdefault(call.program, []).append(np.clip(residual, 0.0, 1.0))
                    residual = residual - self.bank.decode(call.thought, [call.program], len(window))[0]
            rng = make_rng(self.bank.seed, "explain", self.passes_)
            for pid in sorted(targets):
                batch_pool = np.stack(targets[pid])
                for _ in range(self.steps):
                    size = min(self.bank.batch_size, len(batch_pool))
                    rows = np.sort(rng.choice(len(batch_pool), size=size, replace=False))
                    self.bank.train_step(batch_pool[rows], program_ids=[pid])
            self.passes_ += 1
            logger.info("explain-away pass %d: trained %d experts", self.passes_, len(targets))
        return self
