# -*- coding: utf-8 -*-
"""Linear layer with a fixed random connectivity mask.
"""
# License: BSD 2 clause

import numpy as np
from dataclasses import dataclass, field
from scipy.sparse import csr_matrix
from typing import Optional

from pyltm.numeric.autodiff import Graph, Node
from pyltm.utils.errors import ShapeError


@dataclass(frozen=True, eq=False)
class SparseLinear(object):
    """A sparse `rows x cols` weight matrix with a fixed mask.

    The mask lists the (row, col) pairs that carry a weight, sorted by row
    then column, so that weights line up with the CSR layout of scipy. The
    mask never changes; new weights are attached with
    `dataclasses.replace(layer, weights=...)`, which keeps the mask.

    Parameters
    ----------
    rows, cols : int
        Output and input sizes.
    mask_rows, mask_cols : ndarray of int64
        Coordinates of the connections, read-only after construction.
    weights : ndarray of float64
        One weight per mask entry, in mask order.
    density : float
        Fraction of connections present, in (0, 1].
    seed : int or None
        Seed the mask was sampled from.
    """

    rows: int
    cols: int
    mask_rows: np.ndarray
    mask_cols: np.ndarray
    weights: np.ndarray
    density: float
    seed: Optional[int] = None
    indptr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        mask_rows = np.asarray(self.mask_rows, dtype=np.int64)
        mask_cols = np.asarray(self.mask_cols, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if mask_rows.shape != mask_cols.shape or mask_rows.ndim != 1:
            raise ShapeError("mask row and column arrays must be 1-d and of equal length")
        if weights.shape != mask_rows.shape:
            raise ShapeError(f"expected {mask_rows.size} weights, got shape {weights.shape}")
        if mask_rows.size and (mask_rows.min() < 0 or mask_rows.max() >= self.rows
                               or mask_cols.min() < 0 or mask_cols.max() >= self.cols):
            raise ValueError(f"mask entries out of range for a {self.rows}x{self.cols} layer")
        flat = mask_rows * self.cols + mask_cols
        if flat.size > 1 and np.any(np.diff(flat) <= 0):
            order = np.argsort(flat, kind="stable")
            if np.any(np.diff(flat[order]) == 0):
                raise ValueError("mask entries must be unique")
            mask_rows, mask_cols, weights = mask_rows[order], mask_cols[order], weights[order]
        if mask_rows.flags.writeable:
            mask_rows = mask_rows.copy()
            mask_rows.flags.writeable = False
        if mask_cols.flags.writeable:
            mask_cols = mask_cols.copy()
            mask_cols.flags.writeable = False
        indptr = np.zeros(self.rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(mask_rows, minlength=self.rows), out=indptr[1:])
        indptr.flags.writeable = False
        object.__setattr__(self, "mask_rows", mask_rows)
        object.__setattr__(self, "mask_cols", mask_cols)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "indptr", indptr)

    @classmethod
    def random(cls, rows: int, cols: int, density: float, seed: int, scale: float = 1.0) -> "SparseLinear":
        """Sample `round(density * rows * cols)` distinct connections uniformly.

        Weights are drawn from N(0, scale^2) with the same seed, after the mask.
        """
        if not 0.0 < density <= 1.0:
            raise ValueError(f"density must lie in (0, 1], got {density}")
        if rows < 1 or cols < 1:
            raise ValueError(f"layer sizes must be positive, got {rows}x{cols}")
        total = rows * cols
        count = int(round(density * total))
        rng = np.random.default_rng(seed)
        if count == total:
            flat = np.arange(total, dtype=np.int64)
        else:
            flat = np.sort(rng.choice(total, size=count, replace=False, shuffle=False))
        weights = rng.standard_normal(count) * scale
        return cls(rows, cols, flat // cols, flat % cols, weights, density, seed)

    @property
    def nnz(self) -> int:
        return int(self.mask_rows.size)

    def matrix(self, weights: Optional[np.ndarray] = None) -> csr_matrix:
        """The layer as a scipy CSR matrix (own weights unless others are given)."""
        weights = self.weights if weights is None else np.asarray(weights, dtype=np.float64)
        if weights.shape != (self.nnz,):
            raise ShapeError(f"expected {self.nnz} weights, got shape {weights.shape}")
        return csr_matrix((weights, self.mask_cols, self.indptr), shape=(self.rows, self.cols))

    def dense(self) -> np.ndarray:
        """Dense `rows x cols` matrix with zeros off the mask."""
        out = np.zeros((self.rows, self.cols))
        out[self.mask_rows, self.mask_cols] = self.weights
        return out


def _check_input(layer: SparseLinear, x: np.ndarray) -> None:
    if x.ndim not in (1, 2) or x.shape[-1] != layer.cols:
        raise ShapeError(f"sparse layer expects input width {layer.cols}, got shape {x.shape}")


def _apply(matrix: csr_matrix, x: np.ndarray) -> np.ndarray:
    if x.ndim == 1:
        return matrix @ x
    return np.asarray((matrix @ x.T).T)


def sparse_apply(layer: SparseLinear, x: np.ndarray) -> np.ndarray:
    """output[r] = sum of weight * x[c] over mask entries (r, c).

    Parameters
    ----------
    layer : SparseLinear
    x : ndarray of shape (cols,) or (n, cols)

    Returns
    -------
    output : ndarray of shape (rows,) or (n, rows)

    Raises
    ------
    ShapeError
        If the input width differs from `layer.cols`.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_input(layer, x)
    return _apply(layer.matrix(), x)


def sparse_linear(graph: Graph, layer: SparseLinear, weights: Node, x: Node) -> Node:
    """Differentiable :func:`sparse_apply` with the weights given as a graph node."""
    if weights.shape != (layer.nnz,):
        raise ShapeError(f"expected {layer.nnz} weights, got shape {weights.shape}")
    _check_input(layer, x.value)
    rows, cols = layer.mask_rows, layer.mask_cols

    def vjp(g, n, w, v):
        matrix = layer.matrix(w)
        if v.ndim == 1:
            return g[rows] * v[cols], matrix.T @ g
        return (g[:, rows] * v[:, cols]).sum(axis=0), np.asarray((matrix.T @ g.T).T)
    return graph._add("sparse_linear", (weights, x), lambda n, w, v: _apply(layer.matrix(w), v), vjp)
