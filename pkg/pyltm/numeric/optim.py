# -*- coding: utf-8 -*-
"""Adaptive-moment (Adam) optimizer over named parameter blocks.
"""
# License: BSD 2 clause

import numpy as np
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from pyltm.utils.errors import NonFiniteError, ShapeError


@dataclass
class OptimizerState(object):
    """Moments and step counts of an Adam optimizer.

    Moments are created lazily for each block the first time it receives a
    gradient; a block that is left out of a step keeps its moments and its
    step count.

    Parameters
    ----------
    learning_rate : float, optional (default=1e-2)
    beta1, beta2 : float, optional (default=0.9, 0.999)
        Decay rates of the first and second moment estimates.
    eps : float, optional (default=1e-8)
    clip_norm : float or None, optional (default=5.0)
        Gradients of one step are rescaled to this global norm when larger.
    """

    learning_rate: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: Optional[float] = 5.0
    step: int = 0
    first: Dict[str, np.ndarray] = field(default_factory=dict)
    second: Dict[str, np.ndarray] = field(default_factory=dict)
    block_steps: Dict[str, int] = field(default_factory=dict)

    def copy(self) -> "OptimizerState":
        return OptimizerState(self.learning_rate, self.beta1, self.beta2, self.eps, self.clip_norm, self.step,
                              {k: v.copy() for k, v in self.first.items()},
                              {k: v.copy() for k, v in self.second.items()},
                              dict(self.block_steps))

    def forget(self, name: str) -> None:
        """Drop the moments of one block."""
        self.first.pop(name, None)
        self.second.pop(name, None)
        self.block_steps.pop(name, None)


def clip_by_global_norm(grads: Mapping[str, np.ndarray], clip_norm: Optional[float]) -> Tuple[Dict[str, np.ndarray], float]:
    """Rescale all gradients together so their joint norm is at most `clip_norm`."""
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if clip_norm is None or norm <= clip_norm or norm == 0.0:
        return dict(grads), norm
    factor = clip_norm / norm
    return {name: g * factor for name, g in grads.items()}, norm


def optimizer_step(
        params: Mapping[str, np.ndarray],
        grads: Mapping[str, np.ndarray],
        state: OptimizerState) -> Tuple[Dict[str, np.ndarray], OptimizerState]:
    """Apply one Adam update to every block that has a gradient.

    Parameters
    ----------
    params : mapping of str to ndarray
        All parameter blocks.
    grads : mapping of str to ndarray
        Gradients for the blocks to update. Blocks without an entry are
        returned unchanged (same array object).
    state : OptimizerState
        Updated in place and returned.

    Returns
    -------
    params : dict
        New arrays for the updated blocks, the original ones for the others.
    state : OptimizerState

    Raises
    ------
    NonFiniteError
        If a gradient holds NaN or infinity; nothing is updated.
    ShapeError
        If a gradient does not match its block, or names an unknown block.
    """
    for name, grad in grads.items():
        if name not in params:
            raise ShapeError(f"gradient for unknown parameter block {name!r}")
        if np.shape(grad) != np.shape(params[name]):
            raise ShapeError(f"gradient of {name!r} has shape {np.shape(grad)}, "
                             f"parameter has {np.shape(params[name])}")
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"non-finite gradient in parameter block {name!r}")

    clipped, _ = clip_by_global_norm(grads, state.clip_norm)
    state.step += 1
    updated = dict(params)
    for name, grad in clipped.items():
        m = state.first.get(name)
        v = state.second.get(name)
        if m is None:
            m = np.zeros_like(params[name], dtype=np.float64)
            v = np.zeros_like(params[name], dtype=np.float64)
        t = state.block_steps.get(name, 0) + 1
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        m_hat = m / (1.0 - state.beta1 ** t)
        v_hat = v / (1.0 - state.beta2 ** t)
        updated[name] = params[name] - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
        state.first[name] = m
        state.second[name] = v
        state.block_steps[name] = t
    return updated, state
