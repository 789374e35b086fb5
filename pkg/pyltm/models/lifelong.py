# -*- coding: utf-8 -*-
"""Lifelong controller: buffering, segmentation, consolidation with replay,
recall and next-window prediction over one vector memory.

Frames arrive as an unlabeled stream. When the buffer is full its contents
are segmented into windows, the program bank is trained on them mixed with
windows replayed from episodic memory, and every window is then written to
memory under its thought vector.
"""
# License: BSD 2 clause

import csv
import logging
import numpy as np
from collections import Counter
import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Tuple, Union

from tqdm import tqdm

from pyltm.config import ExperimentConfig, GrowthPolicy
from pyltm.memory.records import Consequent, Episodic, PayloadKind, SearchHit, thought_key
from pyltm.memory.vmem import VectorMemory
from pyltm.models.bank import GrowthReport, ProgramBank
from pyltm.models.base import BaseLearner
from pyltm.models.keyclass import KeyClassifier
from pyltm.models.segmentation import Segmentation, coverable_prefix, segment_dp, segment_fixed
from pyltm.utils.converter import as_frames, stack_windows
from pyltm.utils.errors import EmptyMemoryError, TraceFormatError
from pyltm.utils.serialization import pack_container, pack_json, unpack_container, unpack_json
from pyltm.utils.tools import check_is_fitted, make_rng

logger = logging.getLogger(__name__)

METRICS_HEADER = ("step", "mean_min_loss", "n_programs", "replay_fraction", "buffer_fill")
MODEL_MAGIC = b"LTMM"
MODEL_VERSION = 1
# inverse-distance weights of averaged predictions
_WEIGHT_EPS = 1e-6


class StreamBuffer(object):
    """Fixed-capacity frame buffer.

    A frame arriving at a full buffer first hands the buffer to `on_full`
    (which consolidates and clears it), so frames are never overwritten
    unseen.

    Parameters
    ----------
    capacity : int
    width : int
    on_full : callable, optional
        Called with the buffer when a frame arrives while it is full; the
        buffer is cleared afterwards.
    """

    def __init__(self, capacity: int, width: int, on_full: Optional[Callable[["StreamBuffer"], None]] = None) -> None:
        if capacity < 1:
            raise ValueError(f"buffer capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.width = width
        self.on_full = on_full
        self._frames = np.zeros((capacity, width))
        self.fill = 0
        self.start = 0
        self.fills = 0

    @property
    def full(self) -> bool:
        return self.fill == self.capacity

    def __len__(self) -> int:
        return self.fill

    def frames(self) -> np.ndarray:
        """Buffered frames in arrival order (a copy)."""
        return self._frames[:self.fill].copy()

    def clear(self) -> None:
        self.start += self.fill
        self.fill = 0

    def append(self, frames) -> "StreamBuffer":
        frames = as_frames(frames, self.width)
        for frame in frames:
            if self.full:
                self.fills += 1
                if self.on_full is not None:
                    self.on_full(self)
                self.clear()
            self._frames[self.fill] = frame
            self.fill += 1
        return self


@dataclass
class EncodedCall(object):
    """A program applied to a thought, covering a span of frames."""

    program: int
    thought: np.ndarray
    span: Tuple[int, int]
    target_length: int = 0

    def __post_init__(self) -> None:
        if not self.target_length:
            self.target_length = self.span[1]


@dataclass
class Consolidation(object):
    """Metrics of one consolidation, one CSV row."""

    step: int
    mean_min_loss: float
    n_programs: int
    replay_fraction: float
    buffer_fill: float
    segmentation: Segmentation = field(default=None, repr=False)
    records: List[int] = field(default_factory=list, repr=False)

    def row(self) -> Tuple:
        return (self.step, f"{self.mean_min_loss:.8f}", self.n_programs, f"{self.replay_fraction:.6f}",
                f"{self.buffer_fill:.6f}")


class LifelongLearner(BaseLearner):
    """Learns programs and memories from an unlabeled frame stream.

    Parameters
    ----------
    bank : ProgramBank, optional
        Created with default settings when None.
    memory : VectorMemory, optional
        Created with default settings when None.
    window : int, optional (default=7)
        Window length for fixed segmentation and prediction.
    allowed_lengths : sequence of int, optional (default=None)
        Lengths allowed in segmentation; only `window` when None. With
        more than one length the buffer is segmented by dynamic
        programming.
    buffer_capacity : int, optional (default=4096)
    steps : int, optional (default=100)
        Training steps per consolidation.
    replay_ratio : float, optional (default=0.3)
        Fraction of every batch made of windows decoded from episodic
        memory.
    objective : str, optional (default="reconstruction")
        "prediction" scores each window's decode against the next window.
    span_cost : float, optional (default=1.0)
        Constant added per span in segmentation cost.
    growth : GrowthPolicy, optional (default=None)
        Grow the bank on each buffer when ``growth.online`` is set.
    store_consequents : bool, optional (default=True)
        Write a consequent record for every pair of adjacent windows.
    seed : int, optional (default=0)
    verbose : bool, optional (default=False)

    Attributes
    ----------
    buffer_ : StreamBuffer
    metrics_ : list of Consolidation
    """

    def __init__(self, bank: Optional[ProgramBank] = None, memory: Optional[VectorMemory] = None, window: int = 7,
                 allowed_lengths: Optional[Sequence[int]] = None, buffer_capacity: int = 4096, steps: int = 100,
                 replay_ratio: float = 0.3, objective: str = "reconstruction", span_cost: float = 1.0,
                 growth: Optional[GrowthPolicy] = None, store_consequents: bool = True, seed: int = 0,
                 verbose: bool = False) -> None:
        self.bank = bank if bank is not None else ProgramBank(seed=seed)
        self.memory = memory if memory is not None else VectorMemory(seed=seed)
        self.window = window
        self.allowed_lengths = tuple(allowed_lengths) if allowed_lengths else (window,)
        self.buffer_capacity = buffer_capacity
        self.steps = steps
        self.replay_ratio = replay_ratio
        self.objective = objective
        self.span_cost = span_cost
        self.growth = growth
        self.store_consequents = store_consequents
        self.seed = seed
        self.verbose = verbose
        if objective not in ("reconstruction", "prediction"):
            raise ValueError(f"objective must be 'reconstruction' or 'prediction', got {objective!r}")
        if not 0.0 <= replay_ratio <= 1.0:
            raise ValueError(f"replay_ratio must lie in [0, 1], got {replay_ratio}")

        self.buffer_ = StreamBuffer(buffer_capacity, self.bank.width, on_full=self._on_full)
        self.metrics_: List[Consolidation] = []
        self.sections_: Dict[bytes, bytes] = {}
        self.consolidations_ = 0

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "LifelongLearner":
        """A learner with a fresh bank and memory built from `config`."""
        d, t, m = config.dimensions, config.training, config.memory
        bank = ProgramBank(n_bits=d.n_bits, n_actions=d.n_actions, hidden=d.hidden, thought_width=d.thought_width,
                           n_programs=config.bank.n_programs, density=config.stretcher.density,
                           learning_rate=t.learning_rate, clip_norm=t.clip_norm, batch_size=t.batch_size,
                           seed=config.stretcher_seed, growth=config.growth)
        memory = VectorMemory(m.max_degree, m.ef_construction, m.ef_search, m.compaction, seed=config.seed)
        return cls(bank, memory, window=d.window, allowed_lengths=d.allowed_lengths,
                   buffer_capacity=m.buffer_capacity, steps=t.steps, replay_ratio=t.replay_ratio,
                   objective=t.objective, span_cost=t.span_cost, growth=config.growth, seed=config.seed)

    # -- stream -------------------------------------------------------------------

    def _on_full(self, buffer: StreamBuffer) -> None:
        self._consolidate(buffer.frames(), buffer.start, buffer.fill / buffer.capacity)

    def ingest(self, frames) -> StreamBuffer:
        """Append frames, consolidating each time the buffer fills up.

        Raises
        ------
        ShapeError
            If the frame width differs from the bank's.
        """
        self.bank._ensure()
        self.buffer_.append(frames)
        return self.buffer_

    def flush(self) -> Optional[Consolidation]:
        """Consolidate whatever the buffer holds (end of stream)."""
        if not self.buffer_.fill:
            return None
        fill = self.buffer_.fill / self.buffer_.capacity
        result = self._consolidate(self.buffer_.frames(), self.buffer_.start, fill)
        self.buffer_.clear()
        return result

    def fit(self, data, **kwargs) -> "LifelongLearner":
        """Ingest a whole stream of shape (n_frames, width) and flush.

        Returns
        -------
        self : object
            Fitted learner.
        """
        self.ingest(data)
        self.flush()
        return self

    def decision_function(self, windows) -> np.ndarray:
        """Routed program id per window."""
        return self.bank.decision_function(windows)

    # -- segmentation -------------------------------------------------------------------

    def segment(self, frames: np.ndarray) -> Segmentation:
        """Segment buffered frames.

        One allowed length cuts fixed windows. Several lengths tile the
        longest coverable prefix at minimum cost, where a span costs its
        routed min-loss times its length plus `span_cost`.
        """
        n = frames.shape[0]
        if len(self.allowed_lengths) == 1:
            return segment_fixed(0, n, self.allowed_lengths[0])
        stop = coverable_prefix(n, self.allowed_lengths)
        table: Dict[Tuple[int, int], float] = {}
        for length in self.allowed_lengths:
            starts = list(range(0, stop - length + 1))
            if not starts:
                continue
            losses = np.min(self.bank.window_losses(stack_windows(frames, [(s, length) for s in starts])), axis=1)
            table.update({(s, length): float(v) for s, v in zip(starts, losses)})
        return segment_dp(0, stop, self.allowed_lengths,
                          lambda start, length: table[(start, length)] * length + self.span_cost)

    # -- consolidation ---------------------------------------------------------------------

    def _replay_pool(self, length: int, size: int, rng: np.random.Generator) -> np.ndarray:
        records = [r for r in self.memory.records(PayloadKind.EPISODIC) if r.value.length == length]
        if not records or size < 1:
            return np.zeros((0, length, self.bank.width))
        picks = rng.choice(len(records), size=min(size, len(records)), replace=False)
        chosen = [records[i] for i in sorted(picks)]
        thoughts = np.stack([r.value.thought for r in chosen])
        return self.bank.decode(thoughts, [r.value.program for r in chosen], length)

    def consolidate(self) -> Optional[Consolidation]:
        """Consolidate the current buffer contents; same as :meth:`flush`."""
        return self.flush()

    def _consolidate(self, frames: np.ndarray, position: int, fill: float) -> Consolidation:
        bank = self.bank
        segmentation = self.segment(frames)
        rng = make_rng(self.seed, "consolidate", self.consolidations_)
        groups: Dict[int, List[Tuple[int, int]]] = {}
        for span in segmentation.spans:
            groups.setdefault(span[1], []).append(span)

        # training pairs per length: (inputs, targets)
        pairs = {}
        for length, spans in groups.items():
            if self.objective == "prediction":
                known = set(spans)
                nexts = [(s, l) for s, l in spans if (s + l, l) in known]
                if not nexts:
                    continue
                pairs[length] = (stack_windows(frames, nexts), stack_windows(frames, [(s + l, l) for s, l in nexts]))
            else:
                windows = stack_windows(frames, spans)
                pairs[length] = (windows, windows)

        replayed = total = 0
        batch_size = bank.batch_size
        n_replay = int(round(self.replay_ratio * batch_size))
        pools = {length: self._replay_pool(length, 4 * batch_size, rng) for length in pairs}
        lengths = sorted(pairs)
        for step in tqdm(range(self.steps if lengths else 0), disable=not self.verbose, desc="consolidate"):
            length = lengths[step % len(lengths)]
            inputs, targets = pairs[length]
            pool = pools[length]
            take_replay = min(n_replay, len(pool))
            take_fresh = min(batch_size - (n_replay if len(pool) else 0), len(inputs))
            parts_in, parts_out = [], []
            if take_fresh:
                rows = np.sort(rng.choice(len(inputs), size=take_fresh, replace=False))
                parts_in.append(inputs[rows])
                parts_out.append(targets[rows])
            if take_replay:
                rows = np.sort(rng.choice(len(pool), size=take_replay, replace=False))
                parts_in.append(pool[rows])
                parts_out.append(pool[rows])
            if not parts_in:
                continue
            bank.train_step(np.concatenate(parts_in), np.concatenate(parts_out))
            replayed += take_replay
            total += take_replay + take_fresh

        policy = self.growth
        if policy is not None and policy.online and self.window in pairs:
            inputs, targets = pairs[self.window]
            self.grow(inputs, policy, targets=None if self.objective == "reconstruction" else targets)

        written = self._write_episodes(frames, segmentation, position)
        losses = [np.min(bank.window_losses(inputs, targets), axis=1) for inputs, targets in pairs.values()]
        mean_loss = float(np.mean(np.concatenate(losses))) if losses else float("nan")
        result = Consolidation(bank.step_, mean_loss, len(bank.programs_), replayed / total if total else 0.0,
                               fill, segmentation, written)
        self.metrics_.append(result)
        self.consolidations_ += 1
        logger.info("consolidation %d: %d windows, mean min-loss %.5f, %d programs, replay %.2f",
                    self.consolidations_, len(segmentation), mean_loss, result.n_programs, result.replay_fraction)
        return result

    def grow(self, windows, policy: Optional[GrowthPolicy] = None, targets=None, plateau: bool = True) -> GrowthReport:
        """Grow the bank with :meth:`ProgramBank.grow`.

        When the memory already mirrors program keys, accepted programs get
        keys and are mirrored as well, so retrieval can return them.
        """
        report = self.bank.grow(windows, policy or self.growth, targets, plateau)
        if report.accepted and self.memory.count(PayloadKind.PROGRAM):
            KeyClassifier.write_program_keys(self.bank, self.memory)
        return report

    def _write_episodes(self, frames: np.ndarray, segmentation: Segmentation, position: int) -> List[int]:
        written = []
        encoded: Dict[Tuple[int, int], Tuple[int, np.ndarray]] = {}
        for length in sorted({l for _, l in segmentation.spans}):
            spans = [s for s in segmentation.spans if s[1] == length]
            ids, thoughts = self.bank.encode(stack_windows(frames, spans))
            for span, pid, thought in zip(spans, ids, thoughts):
                encoded[span] = (int(pid), thought)
        for span in segmentation.spans:
            pid, thought = encoded[span]
            written.append(self.memory.write(thought_key(thought), Episodic(pid, thought, position + span[0], span[1])))
        if self.store_consequents:
            for current, following in zip(segmentation.spans, segmentation.spans[1:]):
                # spans of one consolidation only: never link across buffers
                pid, _ = encoded[following]
                written.append(self.memory.write(thought_key(encoded[current][1]),
                                                 Consequent(encoded[following][1], pid)))
        return written

    # -- retrieval -------------------------------------------------------------------------

    def recall_hits(self, query, k: int) -> List[Tuple[SearchHit, np.ndarray]]:
        """Nearest episodic records of a query window with their decodes."""
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        query = as_frames(query, self.bank.width)
        _, thoughts = self.bank.encode(query[None])
        hits = self.memory.read(thought_key(thoughts[0]), k, kind=PayloadKind.EPISODIC)
        out = []
        for hit in hits:
            payload = hit.record.value
            window = self.bank.decode(payload.thought, [payload.program], payload.length or len(query))[0]
            out.append((hit, window))
        return out

    def recall(self, query, k: int = 1) -> List[np.ndarray]:
        """Reconstructions of the `k` stored windows nearest to `query`.

        Parameters
        ----------
        query : ndarray of shape (length, width)
            A window, possibly noisy.
        k : int, optional (default=1)

        Returns
        -------
        windows : list of ndarray
            Channel probabilities, ordered by key distance; empty when the
            memory holds no episodic records.

        Raises
        ------
        ValueError
            If k < 1.
        """
        return [window for _, window in self.recall_hits(query, k)]

    def store_consequent(self, window, next_window) -> int:
        """Memorize the thought of `next_window` under the thought of `window`."""
        ids, thoughts = self.bank.encode(np.stack([as_frames(window, self.bank.width),
                                                   as_frames(next_window, self.bank.width)]))
        return self.memory.write(thought_key(thoughts[0]), Consequent(thoughts[1], int(ids[1])))

    def predict_next(self, window, k: int = 1, mode: str = "average") -> Union[np.ndarray, List[np.ndarray]]:
        """Predict the window that follows `window` from consequent records.

        Parameters
        ----------
        window : ndarray of shape (length, width)
        k : int, optional (default=1)
            Consequent records consulted.
        mode : str, optional (default="average")
            "average" decodes the inverse-distance weighted mean of the
            retrieved thoughts with their most frequent program (ties to the
            lowest id); "multi" decodes every retrieved record.

        Returns
        -------
        prediction : ndarray of shape (length, width), or a list of them

        Raises
        ------
        EmptyMemoryError
            If the memory holds no consequent records.
        """
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        if mode not in ("average", "multi"):
            raise ValueError(f"mode must be 'average' or 'multi', got {mode!r}")
        window = as_frames(window, self.bank.width)
        if not self.memory.count(PayloadKind.CONSEQUENT):
            raise EmptyMemoryError("empty memory: no consequent records to predict from")
        _, thoughts = self.bank.encode(window[None])
        hits = self.memory.read(thought_key(thoughts[0]), k, kind=PayloadKind.CONSEQUENT)
        length = len(window)
        if mode == "multi":
            return [self.bank.decode(h.record.value.thought, [h.record.value.program], length)[0] for h in hits]
        weights = np.array([1.0 / (h.distance + _WEIGHT_EPS) for h in hits])
        weights /= weights.sum()
        thought = np.sum([w * h.record.value.thought for w, h in zip(weights, hits)], axis=0)
        votes = Counter(h.record.value.program for h in hits)
        top = max(votes.values())
        program = min(p for p, n in votes.items() if n == top)
        return self.bank.decode(thought, [program], length)[0]

    # -- reporting and persistence -------------------------------------------------------------

    def write_metrics(self, file: TextIO) -> None:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        writer.writerows(m.row() for m in self.metrics_)

    def to_bytes(self, extra: Optional[Dict[bytes, bytes]] = None) -> bytes:
        """The learner as an ``LTMM`` model container.

        `extra` adds sections, such as the key classifier, by 4-byte tag.
        """
        check_is_fitted(self.bank, ["programs_"])
        meta = {"window": self.window, "allowed_lengths": list(self.allowed_lengths),
                "buffer_capacity": self.buffer_capacity, "steps": self.steps, "replay_ratio": self.replay_ratio,
                "objective": self.objective, "span_cost": self.span_cost, "seed": self.seed,
                "store_consequents": self.store_consequents, "consolidations": self.consolidations_,
                "growth": None if self.growth is None else dataclasses.asdict(self.growth),
                "memory": {"max_degree": self.memory.max_degree, "ef_construction": self.memory.ef_construction,
                           "ef_search": self.memory.ef_search, "compaction": self.memory.compaction,
                           "seed": self.memory.seed}}
        sections = [(b"META", pack_json(meta)), (b"BANK", self.bank.to_bytes()), (b"VMEM", self.memory.to_bytes())]
        sections += sorted((extra or {}).items())
        return pack_container(MODEL_MAGIC, MODEL_VERSION, sections)

    @classmethod
    def from_bytes(cls, data: bytes) -> "LifelongLearner":
        sections = unpack_container(data, MODEL_MAGIC, MODEL_VERSION, "model file")
        for tag in (b"META", b"BANK", b"VMEM"):
            if tag not in sections:
                raise TraceFormatError(f"model file has no {tag.decode()} section")
        meta = unpack_json(sections[b"META"])
        bank = ProgramBank.from_bytes(sections[b"BANK"])
        memory = VectorMemory.from_bytes(sections[b"VMEM"], **meta["memory"])
        learner = cls(bank, memory, window=meta["window"], allowed_lengths=meta["allowed_lengths"],
                      buffer_capacity=meta["buffer_capacity"], steps=meta["steps"],
                      replay_ratio=meta["replay_ratio"], objective=meta["objective"], span_cost=meta["span_cost"],
                      store_consequents=meta["store_consequents"], seed=meta["seed"],
                      growth=None if meta.get("growth") is None else GrowthPolicy(**meta["growth"]))
        bank.growth = learner.growth
        learner.sections_ = sections
        learner.consolidations_ = meta["consolidations"]
        return learner


def save_model(path: str, learner: LifelongLearner, extra: Optional[Dict[bytes, bytes]] = None) -> None:
    """Write an ``LTMM`` file; `extra` adds sections such as the key classifier."""
    data = learner.to_bytes(extra)
    with open(path, "wb") as file:
        file.write(data)


def load_model(path: str) -> LifelongLearner:
    """Read an ``LTMM`` file; extra sections are kept in ``learner.sections_``."""
    with open(path, "rb") as file:
        return LifelongLearner.from_bytes(file.read())
