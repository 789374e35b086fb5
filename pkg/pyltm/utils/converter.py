# -*- coding: utf-8 -*-
"""A set of conversion functions between streams, windows and call frames.
"""
# License: BSD 2 clause

import numpy as np
from scipy.special import expit, logit
from typing import Iterable, Optional, Sequence, Tuple

from pyltm.utils.errors import ShapeError

# Probabilities are clamped to this margin before logs and logits.
PROB_EPS = 1e-7


def as_frames(frames: Iterable, width: Optional[int] = None) -> np.ndarray:
    """Convert a stream of frame vectors to a float64 matrix.

    Parameters
    ----------
    frames : array-like of shape (n_frames, width)
    width : int, optional (default=None)
        The expected frame width. Checked when given.

    Returns
    -------
    frames : ndarray of shape (n_frames, width)

    Raises
    ------
    ShapeError
        If the frames are not a matrix or have the wrong width.
    """
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim == 1 and width is not None and arr.size == width:
        arr = arr.reshape(1, width)
    if arr.ndim != 2:
        raise ShapeError(f"frames must be a 2-d array, got shape {arr.shape}")
    if width is not None and arr.shape[1] != width:
        raise ShapeError(f"frame width {arr.shape[1]} does not match the configured width {width}")
    return arr


def stack_windows(frames: np.ndarray, spans: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Cut equal-length spans out of a stream.

    Returns
    -------
    windows : ndarray of shape (n_spans, length, width)
    """
    lengths = {length for _, length in spans}
    if len(lengths) > 1:
        raise ShapeError(f"spans have mixed lengths {sorted(lengths)}")
    if not spans:
        return np.zeros((0, 0, frames.shape[1]))
    return np.stack([frames[start:start + length] for start, length in spans])


def threshold(values: np.ndarray, level: float = 0.5) -> np.ndarray:
    """Binarize values at `level` (values equal to the level map to 1)."""
    return (np.asarray(values) >= level).astype(np.float64)


def bit_accuracy(target: np.ndarray, reconstruction: np.ndarray, n_bits: Optional[int] = None) -> float:
    """Fraction of bit channels that agree after thresholding at 0.5.

    Parameters
    ----------
    target, reconstruction : ndarray of the same shape (..., width)
    n_bits : int, optional
        Only the first `n_bits` channels are compared; all when None.
    """
    target = np.asarray(target)
    reconstruction = np.asarray(reconstruction)
    if target.shape != reconstruction.shape:
        raise ShapeError(f"cannot compare shapes {target.shape} and {reconstruction.shape}")
    if n_bits is not None:
        target = target[..., :n_bits]
        reconstruction = reconstruction[..., :n_bits]
    if target.size == 0:
        return 1.0
    return float(np.mean(threshold(target) == threshold(reconstruction)))


def squash_embedding(embedding: np.ndarray) -> np.ndarray:
    """Map an unbounded program embedding into (0, 1) channel values."""
    return expit(np.asarray(embedding, dtype=np.float64))


def unsquash_embedding(values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`squash_embedding` on clamped channel values."""
    return logit(np.clip(np.asarray(values, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS))


def squash_thought(thought: np.ndarray) -> np.ndarray:
    """Map a thought vector from [-1, 1] to [0, 1] channel values."""
    return (np.asarray(thought, dtype=np.float64) + 1.0) / 2.0


def unsquash_thought(values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`squash_thought`."""
    return 2.0 * np.asarray(values, dtype=np.float64) - 1.0
