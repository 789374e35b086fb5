# -*- coding: utf-8 -*-
"""Sequence-to-sequence LSTM autoencoder driven by a flat parameter vector.

The encoder LSTM reads a window of frames and its final hidden state is the
thought vector. The decoder LSTM starts from the thought (h0 = thought,
c0 = 0), reads the previous frame at every step (a zero frame first) and
emits logits through a linear output projection; a sigmoid turns them into
channel probabilities.

All weights come from one flat vector cut into named blocks by a
:class:`ParamLayout`, so that a hypernetwork can produce them.
"""
# License: BSD 2 clause

import numpy as np
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from pyltm.numeric.autodiff import Graph, Node
from pyltm.utils.converter import PROB_EPS
from pyltm.utils.errors import ShapeError


@dataclass(frozen=True)
class FrameLayout(object):
    """Channel layout of a frame: Bernoulli bit channels, then action channels."""

    n_bits: int
    n_actions: int = 0

    def __post_init__(self) -> None:
        if self.n_bits < 0 or self.n_actions < 0 or self.n_bits + self.n_actions < 1:
            raise ValueError(f"invalid frame layout: {self.n_bits} bits, {self.n_actions} actions")

    @property
    def width(self) -> int:
        return self.n_bits + self.n_actions


@dataclass(frozen=True)
class ParamLayout(object):
    """Named blocks of the flat parameter vector of one autoencoder.

    Block order is fixed: encoder LSTM (input weights, recurrent weights,
    bias), decoder LSTM (same), output projection (weights, bias), and, only
    when the thought width differs from the hidden size, the encoder
    projection and the decoder initial-state map. LSTM gate columns are
    ordered input, forget, candidate, output.
    """

    width: int
    hidden: int
    thought_width: int
    blocks: Tuple[Tuple[str, Tuple[int, ...]], ...] = field(repr=False)
    offsets: Dict[str, Tuple[int, int, Tuple[int, ...]]] = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return sum(int(np.prod(shape)) for _, shape in self.blocks)

    @property
    def projected(self) -> bool:
        return self.thought_width != self.hidden

    def unpack(self, flat: np.ndarray) -> Dict[str, np.ndarray]:
        """Views of the flat vector, one per block."""
        self.check(flat)
        return {name: flat[start:stop].reshape(shape) for name, (start, stop, shape) in self.offsets.items()}

    def nodes(self, graph: Graph, flat: Node) -> Dict[str, Node]:
        """Graph nodes for every block of a flat parameter node."""
        self.check(flat.value)
        return {name: graph.reshape(graph.slice(flat, start, stop), shape)
                for name, (start, stop, shape) in self.offsets.items()}

    def check(self, flat: np.ndarray) -> None:
        if np.shape(flat) != (self.size,):
            raise ShapeError(f"autoencoder parameters must have length {self.size} for "
                             f"D={self.width}, H={self.hidden}, thought={self.thought_width}; "
                             f"got shape {np.shape(flat)}")


def param_layout(width: int, hidden: int, thought_width: Optional[int] = None) -> ParamLayout:
    """Layout of the flat parameter vector for frame width D and hidden size H.

    With thought width equal to H the total is
    ``P = 2 * 4H(D + H + 1) + H*D + D``.

    Examples
    --------
    >>> param_layout(1, 1).size
    26
    >>> param_layout(32, 16).size
    6816
    """
    if width < 1 or hidden < 1:
        raise ValueError(f"frame width and hidden size must be positive, got D={width}, H={hidden}")
    thought_width = hidden if thought_width is None else thought_width
    if thought_width < 1:
        raise ValueError(f"thought width must be positive, got {thought_width}")
    gates = 4 * hidden
    blocks = [
        ("enc_w_ih", (width, gates)), ("enc_w_hh", (hidden, gates)), ("enc_b", (gates,)),
        ("dec_w_ih", (width, gates)), ("dec_w_hh", (hidden, gates)), ("dec_b", (gates,)),
        ("out_w", (hidden, width)), ("out_b", (width,)),
    ]
    if thought_width != hidden:
        blocks += [("enc_proj_w", (hidden, thought_width)), ("enc_proj_b", (thought_width,)),
                   ("dec_init_w", (thought_width, hidden)), ("dec_init_b", (hidden,))]
    offsets, start = {}, 0
    for name, shape in blocks:
        stop = start + int(np.prod(shape))
        offsets[name] = (start, stop, shape)
        start = stop
    return ParamLayout(width, hidden, thought_width, tuple(blocks), offsets)


@dataclass
class AutoencoderParams(object):
    """Flat parameter vector of one autoencoder plus its layout."""

    flat: np.ndarray
    layout: ParamLayout

    def __post_init__(self) -> None:
        self.flat = np.asarray(self.flat, dtype=np.float64)
        self.layout.check(self.flat)

    def blocks(self) -> Dict[str, np.ndarray]:
        return self.layout.unpack(self.flat)


# -- graph builders ----------------------------------------------------------

def lstm_step(graph: Graph, x: Node, h: Node, c: Node, w_ih: Node, w_hh: Node, b: Node) -> Tuple[Node, Node]:
    """One gated LSTM update on graph nodes (rows of `x` are independent)."""
    hidden = h.shape[-1]
    if x.shape[-1] != w_ih.shape[0] or w_hh.shape != (hidden, 4 * hidden) or b.shape != (4 * hidden,):
        raise ShapeError(f"lstm: input {x.shape}, state {h.shape}, weights {w_ih.shape}/{w_hh.shape}/{b.shape}")
    gates = graph.add_bias(graph.add(graph.matmul(x, w_ih), graph.matmul(h, w_hh)), b)
    i = graph.sigmoid(graph.slice(gates, 0, hidden))
    f = graph.sigmoid(graph.slice(gates, hidden, 2 * hidden))
    g = graph.tanh(graph.slice(gates, 2 * hidden, 3 * hidden))
    o = graph.sigmoid(graph.slice(gates, 3 * hidden, 4 * hidden))
    c_next = graph.add(graph.mul(f, c), graph.mul(i, g))
    h_next = graph.mul(o, graph.tanh(c_next))
    return h_next, c_next


def _check_windows(windows: np.ndarray, width: int) -> np.ndarray:
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim != 3 or windows.shape[2] != width:
        raise ShapeError(f"windows must have shape (batch, length, {width}), got {windows.shape}")
    if windows.shape[1] < 1:
        raise ShapeError("windows must hold at least one frame")
    return windows


def encode_nodes(graph: Graph, blocks: Dict[str, Node], windows: np.ndarray) -> Node:
    """Thought vectors (batch x thought width) of a batch of windows."""
    batch, length, _ = windows.shape
    hidden = blocks["enc_w_hh"].shape[0]
    h = graph.constant(np.zeros((batch, hidden)))
    c = graph.constant(np.zeros((batch, hidden)))
    for t in range(length):
        x = graph.constant(windows[:, t, :])
        h, c = lstm_step(graph, x, h, c, blocks["enc_w_ih"], blocks["enc_w_hh"], blocks["enc_b"])
    if "enc_proj_w" in blocks:
        h = graph.add_bias(graph.matmul(h, blocks["enc_proj_w"]), blocks["enc_proj_b"])
    return h


def decode_nodes(graph: Graph, blocks: Dict[str, Node], thoughts: Node, length: int,
                 teacher: Optional[np.ndarray] = None) -> List[Node]:
    """Output logits (one batch x width node per step).

    With `teacher` (batch x length x width) the true previous frame is fed at
    every step; without it the emitted probabilities are fed back.
    """
    if length < 1:
        raise ValueError(f"decode length must be at least 1, got {length}")
    batch = thoughts.shape[0]
    width = blocks["out_w"].shape[1]
    hidden = blocks["dec_w_hh"].shape[0]
    if "dec_init_w" in blocks:
        h = graph.add_bias(graph.matmul(thoughts, blocks["dec_init_w"]), blocks["dec_init_b"])
    else:
        h = thoughts
    if h.shape != (batch, hidden):
        raise ShapeError(f"thoughts of shape {thoughts.shape} do not fit hidden size {hidden}")
    c = graph.constant(np.zeros((batch, hidden)))
    x = graph.constant(np.zeros((batch, width)))
    logits = []
    for t in range(length):
        if t > 0:
            x = graph.constant(teacher[:, t - 1, :]) if teacher is not None else graph.sigmoid(logits[-1])
        h, c = lstm_step(graph, x, h, c, blocks["dec_w_ih"], blocks["dec_w_hh"], blocks["dec_b"])
        logits.append(graph.add_bias(graph.matmul(h, blocks["out_w"]), blocks["out_b"]))
    return logits


def window_loss_nodes(graph: Graph, logits: List[Node], targets: np.ndarray, n_bits: int) -> Node:
    """Per-window loss (vector of length batch).

    Cross-entropy averaged over the first `n_bits` channels plus squared
    error of the sigmoid outputs averaged over the remaining channels,
    averaged over frames.
    """
    batch, length, width = targets.shape
    if len(logits) != length:
        raise ShapeError(f"{len(logits)} decoded frames for targets of length {length}")
    total = None
    for t, step in enumerate(logits):
        target = graph.constant(targets[:, t, :])
        parts = []
        if n_bits > 0:
            xent = graph.sigmoid_xent(graph.slice(step, 0, n_bits), graph.slice(target, 0, n_bits))
            parts.append(graph.mean(xent, axis=1))
        if n_bits < width:
            probs = graph.sigmoid(graph.slice(step, n_bits, width))
            parts.append(graph.mean(graph.square_error(probs, graph.slice(target, n_bits, width)), axis=1))
        frame = parts[0] if len(parts) == 1 else graph.add(parts[0], parts[1])
        total = frame if total is None else graph.add(total, frame)
    return graph.scale(total, 1.0 / length)


# -- numpy entry points --------------------------------------------------------

def lstm_cell(x: np.ndarray, h: np.ndarray, c: np.ndarray, w_ih: np.ndarray, w_hh: np.ndarray,
              b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One LSTM step on arrays: returns (h', c')."""
    graph = Graph()
    h_next, c_next = lstm_step(graph, graph.constant(x), graph.constant(h), graph.constant(c),
                               graph.constant(w_ih), graph.constant(w_hh), graph.constant(b))
    return h_next.value, c_next.value


def _constant_blocks(graph: Graph, params: AutoencoderParams) -> Dict[str, Node]:
    return {name: graph.constant(value) for name, value in params.blocks().items()}


def encode(windows: np.ndarray, params: AutoencoderParams) -> np.ndarray:
    """Thought vector of one window (length x D) or of a batch (batch x length x D)."""
    windows = np.asarray(windows, dtype=np.float64)
    single = windows.ndim == 2
    windows = _check_windows(windows[None] if single else windows, params.layout.width)
    graph = Graph()
    thoughts = encode_nodes(graph, _constant_blocks(graph, params), windows).value
    return thoughts[0] if single else thoughts


def decode(thoughts: np.ndarray, length: int, params: AutoencoderParams) -> np.ndarray:
    """Channel probabilities of `length` frames decoded from thought vector(s)."""
    thoughts = np.asarray(thoughts, dtype=np.float64)
    single = thoughts.ndim == 1
    thoughts = thoughts[None] if single else thoughts
    if thoughts.ndim != 2 or thoughts.shape[1] != params.layout.thought_width:
        raise ShapeError(f"thoughts must have width {params.layout.thought_width}, got shape {thoughts.shape}")
    graph = Graph()
    logits = decode_nodes(graph, _constant_blocks(graph, params), graph.constant(thoughts), length)
    frames = np.stack([graph.sigmoid(step).value for step in logits], axis=1)
    return frames[0] if single else frames


def reconstruction_loss(window: np.ndarray, reconstruction: np.ndarray, n_bits: Optional[int] = None) -> float:
    """Loss between a window and a reconstruction given as probabilities.

    Parameters
    ----------
    window, reconstruction : ndarray of shape (length, width)
    n_bits : int, optional
        Number of leading bit channels; all channels when None.

    Returns
    -------
    loss : float
        Mean cross-entropy over bit channels (probabilities clamped to
        [1e-7, 1 - 1e-7]) plus mean squared error over action channels,
        averaged over frames.
    """
    window = np.asarray(window, dtype=np.float64)
    reconstruction = np.asarray(reconstruction, dtype=np.float64)
    if window.shape != reconstruction.shape or window.ndim != 2:
        raise ShapeError(f"cannot score shapes {window.shape} and {reconstruction.shape}")
    n_bits = window.shape[1] if n_bits is None else n_bits
    per_frame = np.zeros(window.shape[0])
    if n_bits > 0:
        p = np.clip(reconstruction[:, :n_bits], PROB_EPS, 1.0 - PROB_EPS)
        t = window[:, :n_bits]
        per_frame += np.mean(-(t * np.log(p) + (1.0 - t) * np.log1p(-p)), axis=1)
    if n_bits < window.shape[1]:
        per_frame += np.mean((reconstruction[:, n_bits:] - window[:, n_bits:]) ** 2, axis=1)
    return float(np.mean(per_frame))
