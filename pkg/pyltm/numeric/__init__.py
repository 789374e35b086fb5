# -*- coding: utf-8 -*-
"""Automatic differentiation, sparse layers and optimizers used by the models.
"""
from pyltm.numeric.autodiff import Graph, Node, forward, backward
from pyltm.numeric.sparse import SparseLinear, sparse_apply, sparse_linear
from pyltm.numeric.optim import OptimizerState, optimizer_step, clip_by_global_norm

__all__ = ["Graph", "Node", "forward", "backward", "SparseLinear", "sparse_apply", "sparse_linear",
           "OptimizerState", "optimizer_step", "clip_by_global_norm"]
