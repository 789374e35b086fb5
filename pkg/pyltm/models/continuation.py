# -*- coding: utf-8 -*-
"""Continuation calls: a window that ends by calling the encoding of the
window after it.

Frames are widened to ``W = max(D, 64, H) + 1`` channels. The last channel
is a tag, zero on literal frames. A call is a pair of frames with tag 1:
the squashed program embedding, then the thought mapped from [-1, 1] to
[0, 1], each left-aligned and zero-padded. The last window of a sequence
ends with a stop pair (two all-zero frames) instead. Every window is
encoded together with its trailing pair, so an autoencoder of length
``L + 2`` learns to emit the call that continues the sequence.
"""
# License: BSD 2 clause

import logging
import numpy as np
from typing import Dict, List, Optional, Tuple

from tqdm import tqdm

from pyltm.models.bank import ProgramBank
from pyltm.models.base import BaseLearner
from pyltm.models.lifelong import EncodedCall
from pyltm.models.stretcher import PROGRAM_WIDTH
from pyltm.utils.converter import as_frames, squash_embedding, squash_thought, unsquash_embedding, unsquash_thought
from pyltm.utils.errors import DepthLimitError
from pyltm.utils.tools import check_is_fitted, make_rng

logger = logging.getLogger(__name__)


class ContinuationCoder(BaseLearner):
    """Encodes long sequences as chains of continuation calls.

    Parameters
    ----------
    n_bits : int, optional (default=32)
    n_actions : int, optional (default=0)
    window : int, optional (default=4)
        Length L of every window but the first, which also takes the
        remainder of the sequence length modulo L.
    hidden : int, optional (default=16)
        Hidden size (and thought width) of the generated autoencoders.
    n_programs : int, optional (default=2)
    density : float, optional (default=0.01)
    learning_rate : float, optional (default=0.01)
    batch_size : int, optional (default=16)
    max_depth : int, optional (default=64)
        Most calls followed by :meth:`decode_continuation`.
    seed : int, optional (default=0)
    verbose : bool, optional (default=False)

    Attributes
    ----------
    bank_ : ProgramBank
        The bank over widened frames; all of its channels are scored with
        cross-entropy against soft targets.
    """

    def __init__(self, n_bits: int = 32, n_actions: int = 0, window: int = 4, hidden: int = 16,
                 n_programs: int = 2, density: float = 0.01, learning_rate: float = 0.01, batch_size: int = 16,
                 max_depth: int = 64, seed: int = 0, verbose: bool = False) -> None:
        self.n_bits = n_bits
        self.n_actions = n_actions
        self.window = window
        self.hidden = hidden
        self.n_programs = n_programs
        self.density = density
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_depth = max_depth
        self.seed = seed
        self.verbose = verbose
        if window < 1:
            raise ValueError(f"window must be at least 1, got {window}")
        self.bank_: Optional[ProgramBank] = None

    @property
    def width(self) -> int:
        return self.n_bits + self.n_actions

    @property
    def inner_width(self) -> int:
        return max(self.width, PROGRAM_WIDTH, self.hidden) + 1

    def _ensure(self) -> ProgramBank:
        if self.bank_ is None:
            self.bank_ = ProgramBank(n_bits=self.inner_width, hidden=self.hidden, n_programs=self.n_programs,
                                     density=self.density, learning_rate=self.learning_rate,
                                     batch_size=self.batch_size, seed=self.seed).initialize()
        return self.bank_

    # -- frame helpers ------------------------------------------------------------

    def lift(self, frames) -> np.ndarray:
        """Widen frames to the inner width with a zero tag."""
        frames = as_frames(frames, self.width)
        out = np.zeros((len(frames), self.inner_width))
        out[:, :self.width] = frames
        return out

    def call_pair(self, embedding: np.ndarray, thought: np.ndarray) -> np.ndarray:
        """The two tagged frames of a call to (program embedding, thought)."""
        pair = np.zeros((2, self.inner_width))
        pair[0, :PROGRAM_WIDTH] = squash_embedding(embedding)
        pair[1, :len(thought)] = squash_thought(thought)
        pair[:, -1] = 1.0
        return pair

    def stop_pair(self) -> np.ndarray:
        return np.zeros((2, self.inner_width))

    def spans(self, n_frames: int) -> List[Tuple[int, int]]:
        """Windows of a sequence; sequences shorter than 2L form one window."""
        if n_frames < 1:
            raise ValueError("cannot encode an empty sequence")
        count = n_frames // self.window
        if count < 2:
            return [(0, n_frames)]
        head = self.window + n_frames % self.window
        return [(0, head)] + [(head + i * self.window, self.window) for i in range(count - 1)]

    def resolve_program(self, values: np.ndarray) -> int:
        """The program whose embedding is nearest to a decoded program frame."""
        embedding = unsquash_embedding(values[:PROGRAM_WIDTH])
        table = np.stack([p.embedding for p in self.bank_.programs_])
        return int(np.argmin(np.linalg.norm(table - embedding, axis=1)))

    # -- encoding ------------------------------------------------------------------

    def _chain(self, sequence: np.ndarray) -> Tuple[List[EncodedCall], List[np.ndarray]]:
        bank = self._ensure()
        calls, targets = [], []
        pair = self.stop_pair()
        for start, length in reversed(self.spans(len(sequence))):
            target = np.concatenate([self.lift(sequence[start:start + length]), pair])
            ids, thoughts = bank.encode(target[None])
            call = EncodedCall(int(ids[0]), thoughts[0], (start, length), length + 2)
            calls.append(call)
            targets.append(target)
            pair = self.call_pair(bank.programs_[call.program].embedding, call.thought)
        calls.reverse()
        targets.reverse()
        return calls, targets

    def encode_continuation(self, sequence) -> List[EncodedCall]:
        """Encode a sequence as a chain of calls, head first.

        Each window is encoded together with the call pair of the window
        after it (a stop pair for the last one), starting from the end of
        the sequence.

        Parameters
        ----------
        sequence : ndarray of shape (n_frames, width)

        Returns
        -------
        calls : list of EncodedCall
            ``calls[0]`` is the head; its ``target_length`` is its span
            length plus two.
        """
        return self._chain(as_frames(sequence, self.width))[0]

    def targets(self, sequence) -> List[np.ndarray]:
        """Widened training targets (window plus trailing pair) of a sequence."""
        return self._chain(as_frames(sequence, self.width))[1]

    def decode_continuation(self, call: EncodedCall, max_depth: Optional[int] = None) -> np.ndarray:
        """Follow a chain of calls and concatenate the literal frames.

        Raises
        ------
        DepthLimitError
            When more than `max_depth` calls would be decoded.
        """
        check_is_fitted(self, ["bank_"])
        max_depth = self.max_depth if max_depth is None else max_depth
        if max_depth < 1:
            raise ValueError(f"max_depth must be at least 1, got {max_depth}")
        literal: List[np.ndarray] = []
        current: Optional[EncodedCall] = call
        depth = 0
        while current is not None:
            depth += 1
            if depth > max_depth:
                raise DepthLimitError(f"continuation chain deeper than {max_depth} calls")
            out = self.bank_.decode(current.thought, [current.program], current.target_length)[0]
            length = current.target_length - 2
            literal.append(out[:length, :self.width])
            tail = out[length:]
            if np.mean(tail[:, -1]) < 0.5:
                break
            end = current.span[0] + length
            current = EncodedCall(self.resolve_program(tail[0]), unsquash_thought(tail[1, :self.hidden]),
                                  (end, self.window), self.window + 2)
        return np.concatenate(literal)

    # -- training --------------------------------------------------------------------

    def fit(self, data, epochs: int = 5, steps: int = 50, **kwargs) -> "ContinuationCoder":
        """Train on a list of sequences.

        Every epoch re-derives the widened targets with the current bank
        (a window's target holds the call of the window after it) and runs
        `steps` min-tied training steps per target length.

        Parameters
        ----------
        data : list of ndarray of shape (n_frames, width)
        epochs : int, optional (default=5)
        steps : int, optional (default=50)

        Returns
        -------
        self : object
        """
        bank = self._ensure()
        sequences = [as_frames(s, self.width) for s in data]
        if not sequences:
            raise ValueError("fit needs at least one sequence")
        for epoch in tqdm(range(epochs), disable=not self.verbose, desc="continuation"):
            groups: Dict[int, List[np.ndarray]] = {}
            for sequence in sequences:
                for target in self.targets(sequence):
                    groups.setdefault(len(target), []).append(target)
            rng = make_rng(self.seed, "continuation", epoch)
            losses = []
            for length in sorted(groups):
                windows = np.stack(groups[length])
                for _ in range(steps):
                    rows = np.sort(rng.choice(len(windows), size=min(self.batch_size, len(windows)), replace=False))
                    losses.append(bank.train_step(windows[rows])["loss"])
            logger.info("continuation epoch %d: mean loss %.5f", epoch, float(np.mean(losses)))
        return self

    def decision_function(self, windows) -> np.ndarray:
        """Routed program per window, each treated as the last of its chain."""
        bank = self._ensure()
        windows = np.asarray(windows, dtype=np.float64)
        widened = np.stack([np.concatenate([self.lift(w), self.stop_pair()]) for w in windows])
        return bank.decision_function(widened)
