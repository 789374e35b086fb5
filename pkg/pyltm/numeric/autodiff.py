# -*- coding: utf-8 -*-
"""Reverse-mode automatic differentiation over dense float64 arrays.

A :class:`Graph` is a tape. Every operation appends a node whose value is
computed immediately from its parents, so the graph is evaluated as it is
built. :meth:`Graph.forward` re-evaluates every node from the current leaf
values (after :meth:`Graph.assign`), and :meth:`Graph.backward` walks the
tape in reverse accumulating vector-Jacobian products.

Shapes are checked when a node is created. There is no implicit
broadcasting: adding a bias row to a matrix is the explicit
:meth:`Graph.add_bias` operation.
"""
# License: BSD 2 clause

import numpy as np
from scipy.special import expit
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pyltm.utils.errors import ShapeError

Array = np.ndarray


class Node(object):
    """One value on the tape.

    Attributes
    ----------
    id : int
        Position on the tape; parents always have smaller ids.
    op : str
        Operation tag ("leaf", "matmul", "minimum", ...).
    parents : tuple of Node
    value : ndarray
    name : str or None
        Leaves carry a unique name, used as the key of the gradient dict.
    requires_grad : bool
    aux : Any
        Operation-specific state recorded by the forward pass, e.g. the
        argmin index array of a minimum node.
    """

    __slots__ = ("id", "op", "parents", "value", "name", "requires_grad", "aux", "_fn", "_vjp")

    def __init__(self, id: int, op: str, parents: Tuple["Node", ...],
                 fn: Optional[Callable], vjp: Optional[Callable]) -> None:
        self.id = id
        self.op = op
        self.parents = parents
        self.value = None
        self.name = None
        self.requires_grad = False
        self.aux = None
        self._fn = fn
        self._vjp = vjp

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def __repr__(self) -> str:
        return f"Node(id={self.id}, op={self.op!r}, shape={self.shape})"


def _as_array(value: Any) -> Array:
    return np.array(value, dtype=np.float64)


def _check_same(op: str, a: Node, b: Node) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


class Graph(object):
    """A define-by-run computation graph.

    Examples
    --------
    >>> g = Graph()
    >>> x = g.leaf(3.0, name="x")
    >>> loss = g.mul(x, x)
    >>> g.backward(loss)["x"]
    array(6.)
    """

    def __init__(self) -> None:
        self.nodes: List[Node] = []
        self._names: Dict[str, Node] = {}
        self._stale = False

    def __len__(self) -> int:
        return len(self.nodes)

    # -- tape management -------------------------------------------------

    def _add(self, op: str, parents: Sequence[Node], fn: Callable, vjp: Callable) -> Node:
        for parent in parents:
            if not isinstance(parent, Node) or parent.id >= len(self.nodes) or self.nodes[parent.id] is not parent:
                raise ValueError(f"{op}: parent {parent!r} does not belong to this graph")
        node = Node(len(self.nodes), op, tuple(parents), fn, vjp)
        node.value = fn(node, *[p.value for p in parents])
        self.nodes.append(node)
        return node

    def leaf(self, value: Any, name: Optional[str] = None, requires_grad: bool = True) -> Node:
        """Add an input or parameter node."""
        node = Node(len(self.nodes), "leaf", (), None, None)
        node.value = _as_array(value)
        node.requires_grad = requires_grad
        if name is None:
            name = f"leaf{node.id}"
        if name in self._names:
            raise ValueError(f"leaf name {name!r} is already used in this graph")
        node.name = name
        self._names[name] = node
        self.nodes.append(node)
        return node

    def constant(self, value: Any, name: Optional[str] = None) -> Node:
        """Add a leaf that never receives a gradient."""
        return self.leaf(value, name=name, requires_grad=False)

    def assign(self, leaf: Node, value: Any) -> None:
        """Replace a leaf value. The graph must be re-run with :meth:`forward`."""
        if leaf.op != "leaf":
            raise ValueError(f"only leaves can be assigned, got {leaf.op!r}")
        value = _as_array(value)
        if value.shape != leaf.shape:
            raise ShapeError(f"assign: shape {value.shape} does not match leaf shape {leaf.shape}")
        leaf.value = value
        self._stale = True

    def forward(self) -> List[Array]:
        """Evaluate every node from the current leaf values.

        Returns
        -------
        values : list of ndarray, one per node in tape order.
        """
        for node in self.nodes:
            if node.op != "leaf":
                node.value = node._fn(node, *[p.value for p in node.parents])
        self._stale = False
        return [node.value for node in self.nodes]

    def backward(self, loss: Node) -> Dict[str, Array]:
        """Gradient of a scalar node with respect to every trainable leaf.

        Parameters
        ----------
        loss : Node
            A scalar node of this graph.

        Returns
        -------
        grads : dict
            Leaf name to gradient array. Leaves not on a path to `loss` get
            exact zeros.

        Raises
        ------
        RuntimeError
            If a leaf was assigned after the last evaluation.
        ShapeError
            If `loss` is not a scalar.
        """
        if self._stale:
            raise RuntimeError("graph values are stale: call forward() before backward()")
        if loss.id >= len(self.nodes) or self.nodes[loss.id] is not loss:
            raise ValueError("loss node does not belong to this graph")
        if loss.value.shape != ():
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")

        adjoints: Dict[int, Array] = {loss.id: np.ones((), dtype=np.float64)}
        for node in reversed(self.nodes[:loss.id + 1]):
            grad = adjoints.pop(node.id, None) if node.op != "leaf" else adjoints.get(node.id)
            if grad is None or node.op == "leaf":
                continue
            parent_grads = node._vjp(grad, node, *[p.value for p in node.parents])
            for parent, parent_grad in zip(node.parents, parent_grads):
                if parent_grad is None:
                    continue
                if parent.op == "leaf" and not parent.requires_grad:
                    continue
                if parent.id in adjoints:
                    adjoints[parent.id] = adjoints[parent.id] + parent_grad
                else:
                    adjoints[parent.id] = parent_grad

        grads = {}
        for name, leaf in self._names.items():
            if leaf.requires_grad:
                grad = adjoints.get(leaf.id)
                grads[name] = np.zeros_like(leaf.value) if grad is None else np.asarray(grad, dtype=np.float64)
        return grads

    # -- linear algebra ----------------------------------------------------

    def matmul(self, a: Node, b: Node) -> Node:
        """Matrix-matrix, matrix-vector or vector-matrix product."""
        if a.value.ndim == 2 and b.value.ndim in (1, 2):
            if a.shape[1] != b.shape[0]:
                raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
            if b.value.ndim == 2:
                vjp = lambda g, n, x, y: (g @ y.T, x.T @ g)
            else:
                vjp = lambda g, n, x, y: (np.outer(g, y), x.T @ g)
        elif a.value.ndim == 1 and b.value.ndim == 2:
            if a.shape[0] != b.shape[0]:
                raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
            vjp = lambda g, n, x, y: (y @ g, np.outer(x, g))
        else:
            raise ShapeError(f"matmul: unsupported operand shapes {a.shape} and {b.shape}")
        return self._add("matmul", (a, b), lambda n, x, y: x @ y, vjp)

    def add(self, a: Node, b: Node) -> Node:
        _check_same("add", a, b)
        return self._add("add", (a, b), lambda n, x, y: x + y, lambda g, n, x, y: (g, g))

    def sub(self, a: Node, b: Node) -> Node:
        _check_same("sub", a, b)
        return self._add("sub", (a, b), lambda n, x, y: x - y, lambda g, n, x, y: (g, -g))

    def mul(self, a: Node, b: Node) -> Node:
        _check_same("mul", a, b)
        return self._add("mul", (a, b), lambda n, x, y: x * y, lambda g, n, x, y: (g * y, g * x))

    def add_bias(self, a: Node, bias: Node) -> Node:
        """Add a vector to every row of a matrix (or to a vector of equal length)."""
        if bias.value.ndim != 1 or a.value.ndim not in (1, 2) or a.shape[-1] != bias.shape[0]:
            raise ShapeError(f"add_bias: cannot add bias {bias.shape} to {a.shape}")
        if a.value.ndim == 1:
            return self.add(a, bias)
        return self._add("add_bias", (a, bias), lambda n, x, b: x + b,
                         lambda g, n, x, b: (g, g.sum(axis=0)))

    def scale(self, a: Node, factor: float) -> Node:
        factor = float(factor)
        return self._add("scale", (a,), lambda n, x: x * factor, lambda g, n, x: (g * factor,))

    # -- elementwise nonlinearities ---------------------------------------

    def sigmoid(self, a: Node) -> Node:
        def vjp(g, n, x):
            y = n.value
            return (g * y * (1.0 - y),)
        return self._add("sigmoid", (a,), lambda n, x: expit(x), vjp)

    def tanh(self, a: Node) -> Node:
        def vjp(g, n, x):
            y = n.value
            return (g * (1.0 - y * y),)
        return self._add("tanh", (a,), lambda n, x: np.tanh(x), vjp)

    # -- structure ----------------------------------------------------------

    def concat(self, nodes: Sequence[Node], axis: int = -1) -> Node:
        if not nodes:
            raise ShapeError("concat: no operands")
        ndim = nodes[0].value.ndim
        axis = axis % ndim
        for node in nodes[1:]:
            if node.value.ndim != ndim or any(
                    s != t for i, (s, t) in enumerate(zip(node.shape, nodes[0].shape)) if i != axis):
                raise ShapeError(f"concat: shapes {[n.shape for n in nodes]} disagree off axis {axis}")
        bounds = np.cumsum([node.shape[axis] for node in nodes])[:-1]

        def vjp(g, n, *xs):
            return tuple(np.split(g, bounds, axis=axis))
        return self._add("concat", nodes, lambda n, *xs: np.concatenate(xs, axis=axis), vjp)

    def stack(self, nodes: Sequence[Node]) -> Node:
        """Stack equal-shaped nodes along a new leading axis."""
        if not nodes:
            raise ShapeError("stack: no operands")
        for node in nodes[1:]:
            _check_same("stack", nodes[0], node)
        return self._add("stack", nodes, lambda n, *xs: np.stack(xs),
                         lambda g, n, *xs: tuple(g[i] for i in range(len(xs))))

    def slice(self, a: Node, start: int, stop: int, axis: int = -1) -> Node:
        ndim = a.value.ndim
        if ndim == 0:
            raise ShapeError("slice: cannot slice a scalar")
        axis = axis % ndim
        if not 0 <= start <= stop <= a.shape[axis]:
            raise ShapeError(f"slice: [{start}:{stop}] out of range for axis {axis} of {a.shape}")
        index = tuple(slice(start, stop) if i == axis else slice(None) for i in range(ndim))

        def vjp(g, n, x):
            out = np.zeros_like(x)
            out[index] = g
            return (out,)
        return self._add("slice", (a,), lambda n, x: x[index], vjp)

    def row(self, a: Node, i: int) -> Node:
        """Row `i` of a matrix as a vector."""
        if a.value.ndim != 2:
            raise ShapeError(f"row: expected a matrix, got {a.shape}")
        return self.reshape(self.slice(a, i, i + 1, axis=0), (a.shape[1],))

    def reshape(self, a: Node, shape: Tuple[int, ...]) -> Node:
        shape = tuple(int(s) for s in shape)
        if int(np.prod(shape)) != a.value.size:
            raise ShapeError(f"reshape: cannot reshape {a.shape} to {shape}")
        return self._add("reshape", (a,), lambda n, x: x.reshape(shape),
                         lambda g, n, x: (g.reshape(x.shape),))

    # -- reductions and losses ----------------------------------------------

    def sum(self, a: Node) -> Node:
        return self._add("sum", (a,), lambda n, x: np.asarray(np.sum(x, dtype=np.float64)),
                         lambda g, n, x: (np.full_like(x, g),))

    def mean(self, a: Node, axis: Optional[int] = None) -> Node:
        if axis is None:
            count = a.value.size
            return self._add("mean", (a,), lambda n, x: np.asarray(np.mean(x)),
                             lambda g, n, x: (np.full_like(x, g / count),))
        axis = axis % a.value.ndim
        count = a.shape[axis]
        if count == 0:
            raise ShapeError(f"mean: axis {axis} of {a.shape} is empty")

        def vjp(g, n, x):
            return (np.broadcast_to(np.expand_dims(g, axis), x.shape) / count,)
        return self._add("mean", (a,), lambda n, x: x.mean(axis=axis), vjp)

    def square_error(self, a: Node, b: Node) -> Node:
        """Elementwise (a - b)^2."""
        _check_same("square_error", a, b)

        def vjp(g, n, x, y):
            d = 2.0 * (x - y) * g
            return (d, -d)
        return self._add("square_error", (a, b), lambda n, x, y: (x - y) ** 2, vjp)

    def sigmoid_xent(self, logits: Node, targets: Node) -> Node:
        """Elementwise cross-entropy between sigmoid(logits) and targets in [0, 1]."""
        _check_same("sigmoid_xent", logits, targets)

        def fn(n, x, t):
            return np.maximum(x, 0.0) - x * t + np.log1p(np.exp(-np.abs(x)))

        def vjp(g, n, x, t):
            return (g * (expit(x) - t), -g * x)
        return self._add("sigmoid_xent", (logits, targets), fn, vjp)

    def minimum(self, nodes: Sequence[Node]) -> Node:
        """Elementwise minimum over equal-shaped branches.

        The argmin index per element is kept in ``node.aux``; ties go to the
        lowest branch index. Gradient flows only along the argmin branch.
        """
        if not nodes:
            raise ShapeError("minimum: no operands")
        for node in nodes[1:]:
            _check_same("minimum", nodes[0], node)

        def fn(n, *xs):
            stacked = np.stack(xs)
            n.aux = np.argmin(stacked, axis=0)
            return np.min(stacked, axis=0)

        def vjp(g, n, *xs):
            return tuple(np.where(n.aux == k, g, 0.0) for k in range(len(xs)))
        return self._add("minimum", nodes, fn, vjp)


def forward(graph: Graph) -> List[Array]:
    """Evaluate every node of `graph` from its current leaf values."""
    return graph.forward()


def backward(graph: Graph, loss: Node) -> Dict[str, Array]:
    """Gradients of the scalar `loss` with respect to every trainable leaf."""
    return graph.backward(loss)
