# -*- coding: utf-8 -*-
"""Hypernetwork that stretches a 64-element program vector into the flat
parameter vector of one sequence autoencoder.

The network has dense tanh layers 64 -> 64 -> 128 -> 256 followed by a
linear layer 256 -> P whose connectivity is a fixed random mask holding a
small fraction (1% by default) of the possible connections, plus a dense
bias of length P. One stretcher is shared by every program of a bank.
"""
# License: BSD 2 clause

import dataclasses
import numpy as np
from dataclasses import dataclass
from typing import Dict, Optional

from pyltm.models.seqae import AutoencoderParams, ParamLayout
from pyltm.numeric.autodiff import Graph, Node
from pyltm.numeric.sparse import SparseLinear, sparse_apply, sparse_linear
from pyltm.utils.errors import ShapeError
from pyltm.utils.tools import make_rng

PROGRAM_WIDTH = 64
HIDDEN_WIDTHS = (64, 128, 256)
DENSE_BLOCKS = ("w1", "b1", "w2", "b2", "w3", "b3")


@dataclass
class ProgramVector(object):
    """A program embedding, optionally paired with a retrieval key."""

    id: int
    embedding: np.ndarray
    key: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.embedding = np.asarray(self.embedding, dtype=np.float64)
        if self.embedding.shape != (PROGRAM_WIDTH,):
            raise ShapeError(f"program embedding must have length {PROGRAM_WIDTH}, got {self.embedding.shape}")
        if self.key is not None:
            self.key = np.asarray(self.key, dtype=np.float64)
            if self.key.shape != (PROGRAM_WIDTH,):
                raise ShapeError(f"program key must have length {PROGRAM_WIDTH}, got {self.key.shape}")


@dataclass
class StretcherParams(object):
    """Weights of the stretcher network.

    Attributes
    ----------
    dense : dict
        "w1", "b1", "w2", "b2", "w3", "b3" for the three dense layers
        (weights stored input x output).
    sparse : SparseLinear
        Final `P x 256` layer; its mask is fixed at creation.
    bias : ndarray of shape (P,)
    seed : int
    """

    dense: Dict[str, np.ndarray]
    sparse: SparseLinear
    bias: np.ndarray
    seed: int

    @property
    def size(self) -> int:
        """Output length P."""
        return self.sparse.rows

    def blocks(self) -> Dict[str, np.ndarray]:
        """All trainable blocks by name."""
        out = dict(self.dense)
        out["w4"] = self.sparse.weights
        out["b4"] = self.bias
        return out

    def with_blocks(self, blocks: Dict[str, np.ndarray]) -> "StretcherParams":
        """A copy with some blocks replaced; the sparse mask is kept."""
        dense = {name: blocks.get(name, value) for name, value in self.dense.items()}
        sparse = self.sparse
        if "w4" in blocks:
            sparse = dataclasses.replace(sparse, weights=blocks["w4"])
        return StretcherParams(dense, sparse, blocks.get("b4", self.bias), self.seed)

    def copy(self) -> "StretcherParams":
        return self.with_blocks({name: value.copy() for name, value in self.blocks().items()})


def init_stretcher(seed: int, size: int, density: float = 0.01) -> StretcherParams:
    """Create a stretcher with output length `size`.

    Dense weights are uniform in +-1/sqrt(fan_in); the sparse weights are
    normal with standard deviation 1/sqrt(256 * density) and the output
    bias starts at zero.

    Raises
    ------
    ValueError
        If `size` < 1 or `density` lies outside (0, 1].
    """
    if size < 1:
        raise ValueError(f"stretcher output size must be positive, got {size}")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must lie in (0, 1], got {density}")
    rng = make_rng(seed, "stretcher")
    dense = {}
    fan_in = PROGRAM_WIDTH
    for i, fan_out in enumerate(HIDDEN_WIDTHS, start=1):
        bound = 1.0 / np.sqrt(fan_in)
        dense[f"w{i}"] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        dense[f"b{i}"] = rng.uniform(-bound, bound, size=fan_out)
        fan_in = fan_out
    mask_seed = int(make_rng(seed, "stretcher-mask").integers(2 ** 63))
    sparse = SparseLinear.random(size, fan_in, density, mask_seed, scale=1.0 / np.sqrt(fan_in * density))
    return StretcherParams(dense, sparse, np.zeros(size), seed)


def _hidden(embeddings: np.ndarray, dense: Dict[str, np.ndarray]) -> np.ndarray:
    h = embeddings
    for i in range(1, len(HIDDEN_WIDTHS) + 1):
        h = np.tanh(h @ dense[f"w{i}"] + dense[f"b{i}"])
    return h


def stretch_flat(embeddings: np.ndarray, sp: StretcherParams) -> np.ndarray:
    """Flat parameter vectors for one embedding (64,) or a stack (n, 64)."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.shape[-1] != PROGRAM_WIDTH or embeddings.ndim not in (1, 2):
        raise ShapeError(f"embeddings must have width {PROGRAM_WIDTH}, got shape {embeddings.shape}")
    out = sparse_apply(sp.sparse, _hidden(embeddings, sp.dense))
    return out + sp.bias


def stretch(program: ProgramVector, sp: StretcherParams, layout: ParamLayout) -> AutoencoderParams:
    """Autoencoder parameters generated from one program vector.

    Raises
    ------
    ShapeError
        If the stretcher output length differs from the layout size.
    """
    if layout.size != sp.size:
        raise ShapeError(f"stretcher produces {sp.size} parameters but the layout needs {layout.size}")
    return AutoencoderParams(stretch_flat(program.embedding, sp), layout)


def stretch_nodes(graph: Graph, leaves: Dict[str, Node], sp: StretcherParams, embeddings: Node) -> Node:
    """Differentiable stretch of a stack of embeddings (n x 64) -> (n x P).

    `leaves` maps the block names of :meth:`StretcherParams.blocks` to
    graph nodes holding their current values.
    """
    h = embeddings
    for i in range(1, len(HIDDEN_WIDTHS) + 1):
        h = graph.tanh(graph.add_bias(graph.matmul(h, leaves[f"w{i}"]), leaves[f"b{i}"]))
    return graph.add_bias(sparse_linear(graph, sp.sparse, leaves["w4"], h), leaves["b4"])


def sample_program(seed: int, id: int = 0) -> ProgramVector:
    """A program vector with N(0, 1) entries drawn from `seed`."""
    return ProgramVector(id, make_rng(seed, "program", id).standard_normal(PROGRAM_WIDTH))
