# -*- coding: utf-8 -*-
"""A bank of program vectors sharing one stretcher, trained by min-loss tying.

Every window is scored by every program (stretch -> encode -> decode ->
loss). Only the program with the smallest loss is trained on it, together
with the shared stretcher, which makes the programs specialize on the
domains present in an unlabeled stream.
"""
# License: BSD 2 clause

import csv
import logging
import numpy as np
import networkx as nx
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, TextIO, Tuple

from tqdm import tqdm

from pyltm.config import GrowthPolicy
from pyltm.memory.records import KEY_WIDTH
from pyltm.models.base import BaseLearner
from pyltm.models.seqae import (FrameLayout, ParamLayout, AutoencoderParams, param_layout, encode_nodes,
                                decode_nodes, window_loss_nodes)
from pyltm.models.stretcher import (PROGRAM_WIDTH, ProgramVector, StretcherParams, init_stretcher, stretch_flat,
                                    sample_program, stretch_nodes)
from pyltm.numeric.autodiff import Graph, Node
from pyltm.numeric.optim import OptimizerState, optimizer_step
from pyltm.numeric.sparse import SparseLinear
from pyltm.utils.errors import NonFiniteError, ShapeError, TraceFormatError
from pyltm.utils.serialization import pack_arrays, pack_json, unpack_arrays, unpack_json
from pyltm.utils.tools import check_is_fitted, make_rng

logger = logging.getLogger(__name__)

# evaluation chunk, bounds the size of one inference graph
_CHUNK = 512


@dataclass
class RoutingResult(object):
    """Scores of one window against every program."""

    window: int
    losses: np.ndarray
    program: int
    loss: float


@dataclass
class UsageMatrix(object):
    """Routing counts per (domain, program).

    Attributes
    ----------
    domains : list
        Row labels, sorted.
    counts : ndarray of shape (n_domains, n_programs)
    assignment : dict
        Domain to program, from a maximum-weight bipartite matching.
    """

    domains: List[Hashable]
    counts: np.ndarray
    assignment: Dict[Hashable, int]

    @property
    def modal_mass(self) -> Dict[Hashable, float]:
        """Fraction of each domain's windows routed to its most used program."""
        totals = self.counts.sum(axis=1)
        return {d: float(self.counts[i].max() / totals[i]) if totals[i] else 0.0
                for i, d in enumerate(self.domains)}

    @property
    def is_bijection(self) -> bool:
        """True when every domain has its own modal program."""
        modal = [int(np.argmax(row)) for row in self.counts]
        return len(set(modal)) == len(modal)

    def rows(self) -> List[Tuple[Hashable, int, int]]:
        return [(d, p, int(self.counts[i, p])) for i, d in enumerate(self.domains)
                for p in range(self.counts.shape[1])]

    def write_csv(self, file: TextIO) -> None:
        writer = csv.writer(file, lineterminator="\n")
        writer.writerow(["domain", "program", "count"])
        writer.writerows(self.rows())


@dataclass
class GrowthReport(object):
    """Outcome of one :meth:`ProgramBank.grow` call."""

    accepted: List[int]
    losses: List[float]
    rejected_gain: Optional[float] = None


def _as_windows(windows, width: int) -> np.ndarray:
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 2:
        windows = windows[None]
    if windows.ndim != 3 or windows.shape[2] != width:
        raise ShapeError(f"windows must have shape (n_windows, length, {width}), got {windows.shape}")
    return windows


class ProgramBank(BaseLearner):
    """Program vectors expanded by a shared stretcher into LSTM autoencoders.

    Parameters
    ----------
    n_bits : int, optional (default=32)
        Bernoulli channels per frame.
    n_actions : int, optional (default=0)
        Action channels per frame, scored with squared error.
    hidden : int, optional (default=16)
        LSTM hidden size of every generated autoencoder.
    thought_width : int, optional (default=None)
        Width of the thought vectors; the hidden size when None.
    n_programs : int, optional (default=3)
        Programs created by :meth:`initialize`.
    density : float, optional (default=0.01)
        Fraction of connections kept in the final stretcher layer.
    learning_rate : float, optional (default=0.01)
    clip_norm : float, optional (default=5.0)
    batch_size : int, optional (default=32)
    seed : int, optional (default=0)
    growth : GrowthPolicy, optional (default=None)
        Policy used by :meth:`grow` when none is passed.
    verbose : bool, optional (default=False)
        Show progress bars.

    Attributes
    ----------
    layout_ : ParamLayout
    stretcher_ : StretcherParams
    programs_ : list of ProgramVector
        Program ids are their positions in this list.
    optimizer_ : OptimizerState
    step_ : int
        Number of training steps taken.
    usage_ : collections.Counter
        Routed windows per program over all training steps.

    Examples
    --------
    >>> bank = ProgramBank(n_bits=8, hidden=4, n_programs=2, density=0.1).initialize()
    >>> len(bank.programs_)
    2
    """

    def __init__(self, n_bits: int = 32, n_actions: int = 0, hidden: int = 16, thought_width: Optional[int] = None,
                 n_programs: int = 3, density: float = 0.01, learning_rate: float = 0.01, clip_norm: float = 5.0,
                 batch_size: int = 32, seed: int = 0, growth: Optional[GrowthPolicy] = None,
                 verbose: bool = False) -> None:
        self.n_bits = n_bits
        self.n_actions = n_actions
        self.hidden = hidden
        self.thought_width = thought_width
        self.n_programs = n_programs
        self.density = density
        self.learning_rate = learning_rate
        self.clip_norm = clip_norm
        self.batch_size = batch_size
        self.seed = seed
        self.growth = growth
        self.verbose = verbose

        self.layout_: Optional[ParamLayout] = None
        self.stretcher_: Optional[StretcherParams] = None
        self.programs_: Optional[List[ProgramVector]] = None
        self.optimizer_: Optional[OptimizerState] = None
        self.step_ = 0
        self.usage_: Counter = Counter()

    @property
    def frame_layout(self) -> FrameLayout:
        return FrameLayout(self.n_bits, self.n_actions)

    @property
    def width(self) -> int:
        return self.n_bits + self.n_actions

    @property
    def size(self) -> int:
        check_is_fitted(self, ["programs_"])
        return len(self.programs_)

    def initialize(self) -> "ProgramBank":
        """Create the stretcher and `n_programs` N(0, 1) program vectors."""
        if self.n_programs < 1:
            raise ValueError(f"a bank needs at least one program, got n_programs={self.n_programs}")
        self.layout_ = param_layout(self.width, self.hidden, self.thought_width)
        self.stretcher_ = init_stretcher(self.seed, self.layout_.size, self.density)
        self.programs_ = [sample_program(self.seed, i) for i in range(self.n_programs)]
        self.optimizer_ = OptimizerState(learning_rate=self.learning_rate, clip_norm=self.clip_norm)
        self.step_ = 0
        self.usage_ = Counter()
        logger.debug("initialized bank: %d programs, P=%d, %d stretcher connections",
                     self.n_programs, self.layout_.size, self.stretcher_.sparse.nnz)
        return self

    def _ensure(self) -> None:
        if self.programs_ is None:
            self.initialize()

    # -- parameters ----------------------------------------------------------

    def autoencoder(self, program_id: int) -> AutoencoderParams:
        """Parameters of the autoencoder generated by one program."""
        check_is_fitted(self, ["programs_"])
        return AutoencoderParams(stretch_flat(self.programs_[program_id].embedding, self.stretcher_), self.layout_)

    def add_program(self, embedding: np.ndarray, key: Optional[np.ndarray] = None) -> int:
        """Append a program vector and return its id."""
        check_is_fitted(self, ["programs_"])
        program = ProgramVector(len(self.programs_), embedding, key)
        self.programs_.append(program)
        return program.id

    def program_key(self, program_id: int) -> np.ndarray:
        """The N(0, 1) retrieval key a program starts with."""
        return make_rng(self.seed, "program-key", program_id).standard_normal(KEY_WIDTH)

    def _params(self) -> Dict[str, np.ndarray]:
        params = {f"stretcher.{name}": value for name, value in self.stretcher_.blocks().items()}
        for program in self.programs_:
            params[f"program.{program.id}"] = program.embedding
        return params

    def _set_params(self, params: Dict[str, np.ndarray]) -> None:
        blocks = {name.split(".", 1)[1]: value for name, value in params.items() if name.startswith("stretcher.")}
        self.stretcher_ = self.stretcher_.with_blocks(blocks)
        for program in self.programs_:
            program.embedding = params[f"program.{program.id}"]

    # -- graph construction ----------------------------------------------------

    def _loss_nodes(self, graph: Graph, flats: Node, windows: np.ndarray, targets: np.ndarray,
                    program_ids: Sequence[int], teacher: bool) -> List[Node]:
        losses = []
        for row, _ in enumerate(program_ids):
            blocks = self.layout_.nodes(graph, graph.row(flats, row))
            thoughts = encode_nodes(graph, blocks, windows)
            logits = decode_nodes(graph, blocks, thoughts, targets.shape[1], teacher=targets if teacher else None)
            losses.append(window_loss_nodes(graph, logits, targets, self.n_bits))
        return losses

    def _check_pair(self, windows, targets) -> Tuple[np.ndarray, np.ndarray]:
        windows = _as_windows(windows, self.width)
        targets = windows if targets is None else _as_windows(targets, self.width)
        if targets.shape[0] != windows.shape[0]:
            raise ShapeError(f"{windows.shape[0]} windows but {targets.shape[0]} targets")
        return windows, targets

    # -- routing ------------------------------------------------------------------

    def window_losses(self, windows, targets=None, program_ids: Optional[Sequence[int]] = None) -> np.ndarray:
        """Loss matrix of shape (n_windows, n_programs) at inference.

        Windows of one call share a length. The decoder runs free (its own
        outputs are fed back) and is scored against `targets`, the windows
        themselves by default.
        """
        check_is_fitted(self, ["programs_"])
        windows, targets = self._check_pair(windows, targets)
        ids = list(range(len(self.programs_))) if program_ids is None else list(program_ids)
        if not ids:
            raise ValueError("no programs to evaluate")
        flats = stretch_flat(np.stack([self.programs_[i].embedding for i in ids]), self.stretcher_)
        out = np.empty((windows.shape[0], len(ids)))
        for start in range(0, windows.shape[0], _CHUNK):
            stop = start + _CHUNK
            graph = Graph()
            losses = self._loss_nodes(graph, graph.constant(flats), windows[start:stop], targets[start:stop],
                                      ids, teacher=False)
            for column, node in enumerate(losses):
                out[start:stop, column] = node.value
        return out

    def route(self, windows, targets=None) -> List[RoutingResult]:
        """Score windows against every program; ties go to the lowest id.

        Parameters
        ----------
        windows : ndarray of shape (n_windows, length, width) or (length, width)
        targets : ndarray, optional
            What the decodes are scored against (next windows in prediction
            mode); the windows themselves when None.

        Returns
        -------
        results : list of RoutingResult, one per window.
        """
        losses = self.window_losses(windows, targets)
        best = np.argmin(losses, axis=1)
        return [RoutingResult(i, losses[i], int(best[i]), float(losses[i, best[i]])) for i in range(len(losses))]

    def decision_function(self, windows) -> np.ndarray:
        """Routed program id per window."""
        return np.argmin(self.window_losses(windows), axis=1)

    def mean_min_loss(self, windows, targets=None) -> float:
        return float(np.mean(np.min(self.window_losses(windows, targets), axis=1)))

    # -- encoding ------------------------------------------------------------------

    def encode(self, windows, program_ids: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Thought vectors under the given (or routed) programs.

        Returns
        -------
        program_ids : ndarray of shape (n_windows,)
        thoughts : ndarray of shape (n_windows, thought_width)
        """
        check_is_fitted(self, ["programs_"])
        windows = _as_windows(windows, self.width)
        ids = self.decision_function(windows) if program_ids is None else np.asarray(program_ids, dtype=np.int64)
        if ids.shape != (windows.shape[0],):
            raise ShapeError(f"need one program id per window, got {ids.shape}")
        thoughts = np.empty((windows.shape[0], self.layout_.thought_width))
        for pid in np.unique(ids):
            rows = np.flatnonzero(ids == pid)
            graph = Graph()
            blocks = self.layout_.nodes(graph, graph.constant(self.autoencoder(int(pid)).flat))
            thoughts[rows] = encode_nodes(graph, blocks, windows[rows]).value
        return ids, thoughts

    def decode(self, thoughts, program_ids: Sequence[int], length: int) -> np.ndarray:
        """Channel probabilities of `length` frames per thought."""
        check_is_fitted(self, ["programs_"])
        thoughts = np.atleast_2d(np.asarray(thoughts, dtype=np.float64))
        ids = np.asarray(program_ids, dtype=np.int64).reshape(-1)
        if ids.shape[0] != thoughts.shape[0]:
            raise ShapeError(f"{thoughts.shape[0]} thoughts but {ids.shape[0]} program ids")
        out = np.empty((thoughts.shape[0], length, self.width))
        for pid in np.unique(ids):
            rows = np.flatnonzero(ids == pid)
            graph = Graph()
            blocks = self.layout_.nodes(graph, graph.constant(self.autoencoder(int(pid)).flat))
            logits = decode_nodes(graph, blocks, graph.constant(thoughts[rows]), length)
            out[rows] = np.stack([graph.sigmoid(step).value for step in logits], axis=1)
        return out

    # -- training --------------------------------------------------------------------

    def train_step(self, batch, targets=None, program_ids: Optional[Sequence[int]] = None,
                   trainable: Optional[Sequence[int]] = None) -> Dict[str, object]:
        """One min-tied gradient step on a batch of equal-length windows.

        The loss is the batch mean of the per-window minimum over programs.
        The stretcher and the embeddings of the routed programs are updated;
        every other embedding is left untouched.

        Parameters
        ----------
        batch : ndarray of shape (batch, length, width)
        targets : ndarray, optional
            Teacher-forced targets (the batch itself by default).
        program_ids : sequence of int, optional
            Restrict the competition to these programs.
        trainable : sequence of int, optional
            Only these embeddings may move; routed programs outside it keep
            their parameters and moments. All routed programs by default.

        Returns
        -------
        metrics : dict
            "loss" (mean min-loss before the step) and "usage" (routed
            windows per program id).

        Raises
        ------
        ValueError
            On an empty batch.
        NonFiniteError
            When the loss is not finite; no parameter is changed.
        """
        check_is_fitted(self, ["programs_"])
        batch = np.asarray(batch, dtype=np.float64)
        if batch.size == 0:
            raise ValueError("train_step needs a non-empty batch")
        windows, targets = self._check_pair(batch, targets)
        ids = list(range(len(self.programs_))) if program_ids is None else list(program_ids)

        graph = Graph()
        leaves = {name: graph.leaf(value, name=f"stretcher.{name}") for name, value in self.stretcher_.blocks().items()}
        embeddings = [graph.leaf(self.programs_[i].embedding, name=f"program.{i}") for i in ids]
        flats = stretch_nodes(graph, leaves, self.stretcher_, graph.stack(embeddings))
        per_window = graph.minimum(self._loss_nodes(graph, flats, windows, targets, ids, teacher=True))
        loss = graph.mean(per_window)
        value = float(loss.value)
        if not np.isfinite(value):
            raise NonFiniteError(f"non-finite training loss {value} at step {self.step_}")

        grads = graph.backward(loss)
        routed = [ids[k] for k in per_window.aux]
        usage = Counter(routed)
        # lazy update: programs that won no window keep parameters and moments
        selected = {name: g for name, g in grads.items() if name.startswith("stretcher.")}
        for pid in usage:
            if trainable is None or pid in trainable:
                selected[f"program.{pid}"] = grads[f"program.{pid}"]
        params, self.optimizer_ = optimizer_step(self._params(), selected, self.optimizer_)
        self._set_params(params)

        self.step_ += 1
        self.usage_.update(usage)
        logger.debug("step %d: loss %.5f, usage %s", self.step_, value, dict(sorted(usage.items())))
        return {"loss": value, "usage": dict(sorted(usage.items())), "routed": np.asarray(routed)}

    def _batches(self, windows: np.ndarray, steps: int, targets: np.ndarray) -> Iterable[Tuple[np.ndarray, np.ndarray]]:
        for _ in range(steps):
            rng = make_rng(self.seed, "batch", self.step_)
            size = min(self.batch_size, windows.shape[0])
            rows = np.sort(rng.choice(windows.shape[0], size=size, replace=False))
            yield windows[rows], targets[rows]

    def fit(self, data, steps: int = 100, targets=None, **kwargs) -> "ProgramBank":
        """Train on windows for `steps` min-tied steps.

        Parameters
        ----------
        data : ndarray of shape (n_windows, length, width)
            Windows sharing one length; batches are drawn from them
            without replacement at every step.
        steps : int, optional (default=100)
        targets : ndarray, optional
            Targets matching `data` (prediction mode).

        Returns
        -------
        self : object
            Fitted bank.
        """
        self._ensure()
        windows, targets = self._check_pair(data, targets)
        if windows.shape[0] == 0:
            raise ValueError("fit needs at least one window")
        self.history_ = []
        for batch, target in tqdm(self._batches(windows, steps, targets), total=steps,
                                  disable=not self.verbose, desc="bank"):
            self.history_.append(self.train_step(batch, target)["loss"])
        return self

    def train_to_plateau(self, windows, policy: Optional[GrowthPolicy] = None, targets=None) -> int:
        """Train until the mean min-loss stops improving.

        Training stops when the mean batch loss of the last
        ``policy.plateau_steps`` steps improved on the previous block of
        the same length by less than ``policy.plateau_eps``, or after
        ``policy.max_plateau_steps`` steps.

        Returns
        -------
        steps : int
            Steps taken.
        """
        policy = policy or self.growth or GrowthPolicy()
        self._ensure()
        windows, targets = self._check_pair(windows, targets)
        window = max(1, policy.plateau_steps)
        history: List[float] = []
        for batch, target in self._batches(windows, policy.max_plateau_steps, targets):
            history.append(self.train_step(batch, target)["loss"])
            if len(history) >= 2 * window:
                before = np.mean(history[-2 * window:-window])
                after = np.mean(history[-window:])
                if before - after < policy.plateau_eps:
                    break
        logger.info("plateau reached after %d steps (loss %.5f)", len(history), history[-1] if history else np.nan)
        return len(history)

    # -- growth -----------------------------------------------------------------------

    def _snapshot(self):
        return (self.stretcher_.copy(), [ProgramVector(p.id, p.embedding.copy(), None if p.key is None else p.key.copy())
                                         for p in self.programs_], self.optimizer_.copy(), self.step_, Counter(self.usage_))

    def _restore(self, snapshot) -> None:
        self.stretcher_, self.programs_, self.optimizer_, self.step_, self.usage_ = snapshot

    def grow(self, windows, policy: Optional[GrowthPolicy] = None, targets=None, plateau: bool = True) -> GrowthReport:
        """Greedily add programs while they pay for themselves.

        The bank is first trained to a plateau. A candidate copies the
        embedding of the program carrying the largest total routed loss,
        plus N(0, init_sigma) noise. For ``trial_steps`` steps the candidate
        and the stretcher are trained while every older embedding stays
        fixed. It is kept when the mean min-loss strictly drops
        and the drop times the data size (windows x frames) exceeds
        ``cost_per_program``; otherwise the bank is restored exactly and
        growth stops.

        Parameters
        ----------
        windows : ndarray of shape (n_windows, length, width)
        policy : GrowthPolicy, optional
        targets : ndarray, optional
        plateau : bool, optional (default=True)
            Train to a plateau before the first candidate.

        Returns
        -------
        report : GrowthReport
        """
        policy = policy or self.growth or GrowthPolicy()
        self._ensure()
        windows, targets = self._check_pair(windows, targets)
        if plateau:
            self.train_to_plateau(windows, policy, targets)
        data_size = windows.shape[0] * windows.shape[1]
        losses = self.window_losses(windows, targets)
        base = float(np.mean(np.min(losses, axis=1)))
        report = GrowthReport([], [base])
        rng = make_rng(self.seed, "grow", self.step_)

        while len(self.programs_) < policy.max_programs:
            if base * data_size <= policy.cost_per_program:
                logger.info("growth stopped: remaining loss %.4f cannot pay for a program", base * data_size)
                break
            best = np.argmin(losses, axis=1)
            totals = np.bincount(best, weights=losses[np.arange(len(best)), best], minlength=len(self.programs_))
            parent = int(np.argmax(totals))
            snapshot = self._snapshot()
            candidate = self.add_program(self.programs_[parent].embedding + rng.normal(0.0, policy.init_sigma,
                                                                                    PROGRAM_WIDTH))
            if any(p.key is not None for p in self.programs_):
                self.programs_[candidate].key = self.program_key(candidate)
            for batch, target in self._batches(windows, policy.trial_steps, targets):
                self.train_step(batch, target, trainable=[candidate])
            trial = self.window_losses(windows, targets)
            new = float(np.mean(np.min(trial, axis=1)))
            gain = (base - new) * data_size
            if new < base and gain > policy.cost_per_program:
                logger.info("accepted program %d (parent %d): loss %.5f -> %.5f, gain %.3f",
                            candidate, parent, base, new, gain)
                report.accepted.append(candidate)
                report.losses.append(new)
                base, losses = new, trial
            else:
                logger.info("rejected candidate from parent %d: loss %.5f -> %.5f, gain %.3f <= %.3f",
                            parent, base, new, gain, policy.cost_per_program)
                self._restore(snapshot)
                report.rejected_gain = gain
                break
        return report

    # -- evaluation --------------------------------------------------------------------

    def usage_matrix(self, windows, labels: Sequence[Hashable]) -> UsageMatrix:
        """Routing counts per (domain, program) for labeled windows.

        Labels come from the evaluation harness; training never sees them.
        """
        check_is_fitted(self, ["programs_"])
        routed = self.decision_function(windows)
        if len(labels) != len(routed):
            raise ShapeError(f"{len(routed)} windows but {len(labels)} labels")
        domains = sorted(set(labels))
        row = {d: i for i, d in enumerate(domains)}
        counts = np.zeros((len(domains), len(self.programs_)), dtype=np.int64)
        for label, pid in zip(labels, routed):
            counts[row[label], pid] += 1

        graph = nx.Graph()
        for i, d in enumerate(domains):
            for p in range(counts.shape[1]):
                if counts[i, p]:
                    graph.add_edge(("domain", i), ("program", p), weight=int(counts[i, p]))
        assignment = {}
        for a, b in nx.max_weight_matching(graph):
            domain, program = (a, b) if a[0] == "domain" else (b, a)
            assignment[domains[domain[1]]] = program[1]
        return UsageMatrix(domains, counts, dict(sorted(assignment.items(), key=lambda kv: str(kv[0]))))

    # -- persistence ---------------------------------------------------------------------

    def to_bytes(self) -> bytes:
        """Everything needed to continue training bit-exactly."""
        check_is_fitted(self, ["programs_"])
        meta = {
            "n_bits": self.n_bits, "n_actions": self.n_actions, "hidden": self.hidden,
            "thought_width": self.layout_.thought_width, "density": self.density,
            "learning_rate": self.learning_rate, "clip_norm": self.clip_norm, "batch_size": self.batch_size,
            "seed": self.seed, "step": self.step_, "n_programs": len(self.programs_),
            "stretcher_seed": self.stretcher_.seed, "keys": [p.key is not None for p in self.programs_],
            "usage": {str(k): v for k, v in sorted(self.usage_.items())},
            "optimizer": {"step": self.optimizer_.step, "beta1": self.optimizer_.beta1,
                          "beta2": self.optimizer_.beta2, "eps": self.optimizer_.eps,
                          "block_steps": dict(sorted(self.optimizer_.block_steps.items()))},
        }
        arrays = {f"stretcher.{name}": value for name, value in self.stretcher_.dense.items()}
        sparse = self.stretcher_.sparse
        arrays.update({"stretcher.w4": sparse.weights, "stretcher.b4": self.stretcher_.bias,
                       "mask.rows": sparse.mask_rows, "mask.cols": sparse.mask_cols,
                       "mask.shape": np.array([sparse.rows, sparse.cols, sparse.seed], dtype=np.int64),
                       "mask.density": np.array([sparse.density])})
        for p in self.programs_:
            arrays[f"program.{p.id}"] = p.embedding
            if p.key is not None:
                arrays[f"key.{p.id}"] = p.key
        for name, value in self.optimizer_.first.items():
            arrays[f"adam.m.{name}"] = value
        for name, value in self.optimizer_.second.items():
            arrays[f"adam.v.{name}"] = value
        meta_bytes = pack_json(meta)
        return len(meta_bytes).to_bytes(8, "little") + meta_bytes + pack_arrays(arrays)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProgramBank":
        if len(data) < 8:
            raise TraceFormatError(f"truncated bank section: expected at least 8 bytes, got {len(data)}")
        size = int.from_bytes(data[:8], "little")
        if len(data) < 8 + size:
            raise TraceFormatError(f"truncated bank section: expected at least {8 + size} bytes, got {len(data)}")
        meta = unpack_json(data[8:8 + size])
        arrays = unpack_arrays(data[8 + size:])
        bank = cls(n_bits=meta["n_bits"], n_actions=meta["n_actions"], hidden=meta["hidden"],
                   thought_width=meta["thought_width"], n_programs=meta["n_programs"], density=meta["density"],
                   learning_rate=meta["learning_rate"], clip_norm=meta["clip_norm"],
                   batch_size=meta["batch_size"], seed=meta["seed"])
        bank.layout_ = param_layout(bank.width, bank.hidden, bank.thought_width)
        rows, cols, mask_seed = (int(v) for v in arrays["mask.shape"])
        sparse = SparseLinear(rows, cols, arrays["mask.rows"], arrays["mask.cols"], arrays["stretcher.w4"],
                              float(arrays["mask.density"][0]), mask_seed)
        dense = {name.split(".", 1)[1]: arrays[name] for name in arrays
                 if name.startswith("stretcher.") and name not in ("stretcher.w4", "stretcher.b4")}
        bank.stretcher_ = StretcherParams(dense, sparse, arrays["stretcher.b4"], meta["stretcher_seed"])
        bank.programs_ = [ProgramVector(i, arrays[f"program.{i}"], arrays.get(f"key.{i}") if has_key else None)
                          for i, has_key in enumerate(meta["keys"])]
        opt = meta["optimizer"]
        bank.optimizer_ = OptimizerState(
            learning_rate=meta["learning_rate"], beta1=opt["beta1"], beta2=opt["beta2"], eps=opt["eps"],
            clip_norm=meta["clip_norm"], step=opt["step"],
            first={name[len("adam.m."):]: v for name, v in arrays.items() if name.startswith("adam.m.")},
            second={name[len("adam.v."):]: v for name, v in arrays.items() if name.startswith("adam.v.")},
            block_steps=dict(opt["block_steps"]))
        bank.step_ = meta["step"]
        bank.usage_ = Counter({int(k): v for k, v in meta["usage"].items()})
        return bank

    def __repr__(self):
        n = "unfitted" if self.programs_ is None else f"{len(self.programs_)} programs"
        return f"{self.__class__.__name__}({n})"
