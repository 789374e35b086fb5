# -*- coding: utf-8 -*-
"""Key classifier: a small LSTM that maps a window to a retrieval key, so
that candidate programs come from a memory read instead of scoring every
program of the bank.
"""
# License: BSD 2 clause

import logging
import numpy as np
from typing import Dict, List, Optional

from tqdm import tqdm

from pyltm.memory.records import KEY_WIDTH, PayloadKind
from pyltm.memory.vmem import VectorMemory
from pyltm.models.bank import ProgramBank, RoutingResult
from pyltm.models.base import BaseLearner
from pyltm.models.seqae import lstm_step
from pyltm.numeric.autodiff import Graph, Node
from pyltm.numeric.optim import OptimizerState, optimizer_step
from pyltm.utils.errors import ShapeError, TraceFormatError
from pyltm.utils.serialization import Reader, pack_arrays, pack_json, unpack_arrays, unpack_json
from pyltm.utils.tools import check_is_fitted, make_rng

logger = logging.getLogger(__name__)

PHASES = ("joint", "keys_only", "auto")


class KeyClassifier(BaseLearner):
    """Seq2vec classifier from windows to 64-element keys.

    One LSTM layer reads the window; a linear head maps its last hidden
    state to a key. It is trained so that a window's key lands on the key
    of the program that best reconstructs the window.

    Parameters
    ----------
    n_bits : int, optional (default=32)
    n_actions : int, optional (default=0)
    hidden : int, optional (default=32)
    learning_rate : float, optional (default=0.01)
        Step size of the classifier parameters.
    key_learning_rate : float, optional (default=0.01)
        Step size of the program keys.
    epochs : int, optional (default=20)
    batch_size : int, optional (default=32)
    stable_delta : float, optional (default=1e-4)
        In the "auto" phase, training switches to keys only once no
        classifier parameter moved by more than this in an epoch.
    seed : int, optional (default=0)
    verbose : bool, optional (default=False)

    Attributes
    ----------
    params_ : dict of ndarray
        "w_ih", "w_hh", "b" (LSTM), "head_w", "head_b".
    phase_ : str
        "joint" or "keys_only".
    history_ : list of float
        Mean loss per epoch.
    """

    def __init__(self, n_bits: int = 32, n_actions: int = 0, hidden: int = 32, learning_rate: float = 0.01,
                 key_learning_rate: float = 0.01, epochs: int = 20, batch_size: int = 32,
                 stable_delta: float = 1e-4, seed: int = 0, verbose: bool = False) -> None:
        self.n_bits = n_bits
        self.n_actions = n_actions
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.key_learning_rate = key_learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.stable_delta = stable_delta
        self.seed = seed
        self.verbose = verbose
        self.params_: Optional[Dict[str, np.ndarray]] = None
        self.phase_ = "joint"
        self.history_: List[float] = []

    @property
    def width(self) -> int:
        return self.n_bits + self.n_actions

    @property
    def param_count(self) -> int:
        h, d = self.hidden, self.width
        return 4 * h * (d + h + 1) + h * KEY_WIDTH + KEY_WIDTH

    def initialize(self) -> "KeyClassifier":
        rng = make_rng(self.seed, "keyclass")
        h, d = self.hidden, self.width
        bound = 1.0 / np.sqrt(h)
        self.params_ = {
            "w_ih": rng.uniform(-bound, bound, (d, 4 * h)),
            "w_hh": rng.uniform(-bound, bound, (h, 4 * h)),
            "b": np.zeros(4 * h),
            "head_w": rng.uniform(-bound, bound, (h, KEY_WIDTH)),
            "head_b": np.zeros(KEY_WIDTH),
        }
        self._opt = OptimizerState(learning_rate=self.learning_rate)
        self._key_opt = OptimizerState(learning_rate=self.key_learning_rate)
        self.phase_ = "joint"
        return self

    def _key_nodes(self, graph: Graph, nodes: Dict[str, Node], windows: np.ndarray) -> Node:
        batch, length, _ = windows.shape
        h = graph.constant(np.zeros((batch, self.hidden)))
        c = graph.constant(np.zeros((batch, self.hidden)))
        for t in range(length):
            h, c = lstm_step(graph, graph.constant(windows[:, t, :]), h, c, nodes["w_ih"], nodes["w_hh"], nodes["b"])
        return graph.add_bias(graph.matmul(h, nodes["head_w"]), nodes["head_b"])

    def _windows(self, windows) -> np.ndarray:
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim == 2:
            windows = windows[None]
        if windows.ndim != 3 or windows.shape[2] != self.width:
            raise ShapeError(f"windows must have shape (n_windows, length, {self.width}), got {windows.shape}")
        return windows

    def classify(self, window) -> np.ndarray:
        """Key of one window (length x width), or keys of a batch."""
        check_is_fitted(self, ["params_"])
        single = np.ndim(window) == 2
        windows = self._windows(window)
        graph = Graph()
        nodes = {name: graph.constant(value) for name, value in self.params_.items()}
        keys = self._key_nodes(graph, nodes, windows).value
        return keys[0] if single else keys

    def decision_function(self, windows) -> np.ndarray:
        return self.classify(self._windows(windows))

    # -- training ----------------------------------------------------------------------

    @staticmethod
    def ensure_keys(bank: ProgramBank) -> None:
        """Give every program without a key an N(0, 1) key."""
        for program in bank.programs_:
            if program.key is None:
                program.key = bank.program_key(program.id)

    def train_step(self, windows: np.ndarray, routed: np.ndarray, bank: ProgramBank, phase: str) -> float:
        """One step on a batch; `routed` holds each window's best program."""
        graph = Graph()
        train_classifier = phase == "joint"
        nodes = {name: graph.leaf(value, name=f"clf.{name}", requires_grad=train_classifier)
                 for name, value in self.params_.items()}
        keys = graph.leaf(np.stack([p.key for p in bank.programs_]), name="keys")
        onehot = np.zeros((len(routed), len(bank.programs_)))
        onehot[np.arange(len(routed)), routed] = 1.0
        targets = graph.matmul(graph.constant(onehot), keys)
        predicted = self._key_nodes(graph, nodes, windows)
        # squared distance, averaged over windows
        loss = graph.scale(graph.mean(graph.square_error(predicted, targets)), float(KEY_WIDTH))
        grads = graph.backward(loss)

        key_grads = grads["keys"]
        used = sorted(set(int(r) for r in routed))
        params = {f"key.{pid}": bank.programs_[pid].key for pid in used}
        new_keys, self._key_opt = optimizer_step(params, {f"key.{pid}": key_grads[pid] for pid in used}, self._key_opt)
        for pid in used:
            bank.programs_[pid].key = new_keys[f"key.{pid}"]
        if train_classifier:
            updated, self._opt = optimizer_step(self.params_, {name: grads[f"clf.{name}"] for name in self.params_},
                                                self._opt)
            self.params_ = updated
        return float(loss.value)

    def train_retrieval(self, windows, bank: ProgramBank, phase: Optional[str] = None) -> Dict[str, object]:
        """Pull each window's key toward the key of its routed program.

        Parameters
        ----------
        windows : ndarray of shape (n_windows, length, width)
        bank : ProgramBank
            Trained bank; its routing picks the target keys.
        phase : str, optional
            "joint" trains classifier and keys, "keys_only" trains the keys
            with the classifier frozen, "auto" starts joint and freezes the
            classifier once it is stable. Defaults to the current phase.

        Returns
        -------
        metrics : dict
            "losses" (mean loss per epoch) and "phase" (final phase).
        """
        phase = phase or self.phase_
        if phase not in PHASES:
            raise ValueError(f"phase must be one of {PHASES}, got {phase!r}")
        if self.params_ is None:
            self.initialize()
        windows = self._windows(windows)
        self.ensure_keys(bank)
        routed = bank.decision_function(windows)
        auto = phase == "auto"
        current = "joint" if auto else phase
        losses = []
        for epoch in tqdm(range(self.epochs), disable=not self.verbose, desc="keys"):
            before = {name: value.copy() for name, value in self.params_.items()}
            rng = make_rng(self.seed, "keyclass-epoch", len(self.history_))
            order = rng.permutation(len(windows))
            epoch_losses = []
            for start in range(0, len(order), self.batch_size):
                rows = np.sort(order[start:start + self.batch_size])
                epoch_losses.append(self.train_step(windows[rows], routed[rows], bank, current))
            mean = float(np.mean(epoch_losses))
            losses.append(mean)
            self.history_.append(mean)
            delta = max(float(np.max(np.abs(self.params_[n] - before[n]))) for n in before)
            logger.debug("key epoch %d (%s): loss %.5f, parameter delta %.2e", epoch, current, mean, delta)
            if auto and current == "joint" and delta < self.stable_delta:
                logger.info("classifier stable after %d epochs, training keys only", epoch + 1)
                current = "keys_only"
        self.phase_ = current
        return {"losses": losses, "phase": current}

    def fit(self, data, bank: ProgramBank = None, phase: str = "auto", **kwargs) -> "KeyClassifier":
        """Train with :meth:`train_retrieval`; `bank` is required."""
        if bank is None:
            raise ValueError("KeyClassifier.fit needs the program bank whose routing it learns")
        self.train_retrieval(data, bank, phase)
        return self

    # -- retrieval ---------------------------------------------------------------------

    def retrieve_programs(self, window, memory: VectorMemory, k: int) -> List[int]:
        """Candidate program ids for a window, nearest key first."""
        hits = memory.read(self.classify(window), k, kind=PayloadKind.PROGRAM)
        return [hit.record.value.program for hit in hits]

    def route_candidates(self, window, bank: ProgramBank, memory: VectorMemory, k: int) -> Optional[RoutingResult]:
        """Route a window among the retrieved candidates only.

        Returns None when the memory holds no program records.
        """
        candidates = self.retrieve_programs(window, memory, k)
        if not candidates:
            return None
        losses = bank.window_losses(np.asarray(window)[None], program_ids=candidates)[0]
        best = int(np.argmin(losses))
        full = np.full(len(bank.programs_), np.inf)
        full[candidates] = losses
        # equal losses go to the lowest program id, as in a full route
        best_id = min(pid for pid, loss in zip(candidates, losses) if loss == losses[best])
        return RoutingResult(0, full, best_id, float(losses[best]))

    @staticmethod
    def write_program_keys(bank: ProgramBank, memory: VectorMemory) -> List[int]:
        """Mirror the bank's program keys into memory as Program records."""
        KeyClassifier.ensure_keys(bank)
        return memory.replace_program_keys({p.id: p.key for p in bank.programs_})

    # -- persistence -------------------------------------------------------------------

    def to_bytes(self) -> bytes:
        check_is_fitted(self, ["params_"])
        meta = pack_json({"n_bits": self.n_bits, "n_actions": self.n_actions, "hidden": self.hidden,
                          "seed": self.seed, "phase": self.phase_})
        return len(meta).to_bytes(8, "little") + meta + pack_arrays(self.params_)

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyClassifier":
        """Inverse of :meth:`to_bytes`.

        Raises
        ------
        TraceFormatError
            On truncated or inconsistent data.
        """
        reader = Reader(data, "key classifier section")
        size = int.from_bytes(reader.take(8), "little")
        meta = unpack_json(reader.take(size))
        clf = cls(n_bits=meta["n_bits"], n_actions=meta["n_actions"], hidden=meta["hidden"], seed=meta["seed"])
        clf.initialize()
        params = unpack_arrays(data[reader.pos:])
        expected = {name: value.shape for name, value in clf.params_.items()}
        if {name: value.shape for name, value in params.items()} != expected:
            raise TraceFormatError(f"key classifier parameters do not match hidden={clf.hidden}, "
                                   f"width={clf.width}")
        clf.params_ = params
        clf.phase_ = meta["phase"]
        return clf
