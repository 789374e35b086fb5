# -*- coding: utf-8 -*-
"""Exception types raised across pyltm.
"""
# License: BSD 2 clause


class ShapeError(ValueError):
    """An array or layout does not have the shape an operation requires."""


class NonFiniteError(FloatingPointError):
    """A loss or gradient contains NaN or infinity."""


class TraceFormatError(ValueError):
    """A binary file (trace, memory snapshot or model) is malformed."""


class EmptyMemoryError(LookupError):
    """The vector memory holds no record of the kind a query needs."""


class DepthLimitError(RecursionError):
    """Continuation decoding followed more calls than its depth limit."""
