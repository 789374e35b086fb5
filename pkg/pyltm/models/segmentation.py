# -*- coding: utf-8 -*-
"""Segmentation of a frame range into windows.

Implements fixed-length cutting and an optimal segmentation over a set of
allowed window lengths found by prefix dynamic programming with
back-tracking.
"""
# License: BSD 2 clause

import numpy as np
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Sequence, Tuple

__all__ = ["Segmentation", "segment_fixed", "segment_dp", "coverable_prefix", "enumerate_segmentations"]

SpanCost = Callable[[int, int], float]


@dataclass
class Segmentation(object):
    """Contiguous (start, length) spans tiling ``[start, stop)``."""

    start: int
    stop: int
    spans: List[Tuple[int, int]] = field(default_factory=list)
    cost: float = 0.0

    def __len__(self) -> int:
        return len(self.spans)

    def __iter__(self):
        return iter(self.spans)

    @property
    def lengths(self) -> List[int]:
        return [length for _, length in self.spans]

    def validate(self, allowed: Iterable[int] = None) -> None:
        """Check that the spans tile the covered range.

        Raises
        ------
        ValueError
            On a gap, an overlap or a length outside `allowed`.
        """
        position = self.start
        allowed = None if allowed is None else set(allowed)
        for start, length in self.spans:
            if start != position or length < 1:
                raise ValueError(f"span ({start}, {length}) does not continue at frame {position}")
            if allowed is not None and length not in allowed:
                raise ValueError(f"span length {length} is not allowed")
            position += length
        if position > self.stop:
            raise ValueError(f"spans run past the end of the range ({position} > {self.stop})")


def segment_fixed(start: int, stop: int, length: int) -> Segmentation:
    """Consecutive spans of `length`; a trailing remainder is dropped.

    Examples
    --------
    >>> segment_fixed(0, 20, 7).spans
    [(0, 7), (7, 7)]
    """
    if length < 1:
        raise ValueError(f"window length must be at least 1, got {length}")
    count = max(stop - start, 0) // length
    return Segmentation(start, stop, [(start + i * length, length) for i in range(count)])


def coverable_prefix(size: int, allowed: Sequence[int]) -> int:
    """Longest prefix length <= `size` that allowed lengths tile exactly."""
    reachable = np.zeros(size + 1, dtype=bool)
    reachable[0] = True
    for i in range(1, size + 1):
        reachable[i] = any(length <= i and reachable[i - length] for length in allowed)
    return int(np.flatnonzero(reachable)[-1])


def segment_dp(start: int, stop: int, allowed: Sequence[int], cost: SpanCost) -> Segmentation:
    """Minimum-cost tiling of ``[start, stop)`` by allowed span lengths.

    ``best(i) = min over l of best(i - l) + cost(span)``; spans are
    recovered by back-tracking. Among tilings of equal cost the one with
    fewer spans wins, then the one whose spans are longer.

    Parameters
    ----------
    start, stop : int
    allowed : sequence of int
        Allowed span lengths.
    cost : callable
        ``cost(span_start, span_length) -> float``, non-negative.

    Returns
    -------
    segmentation : Segmentation

    Raises
    ------
    ValueError
        If `allowed` is empty or the range cannot be tiled exactly.
    """
    lengths = sorted({int(length) for length in allowed}, reverse=True)
    if not lengths or lengths[-1] < 1:
        raise ValueError(f"allowed lengths must be positive and non-empty, got {list(allowed)}")
    size = stop - start
    if size < 0:
        raise ValueError(f"empty range [{start}, {stop})")
    inf = (np.inf, np.inf)
    best = [inf] * (size + 1)
    back = [0] * (size + 1)
    best[0] = (0.0, 0)
    for i in range(1, size + 1):
        for length in lengths:
            if length > i or best[i - length] == inf:
                continue
            prev_cost, prev_count = best[i - length]
            candidate = (prev_cost + float(cost(start + i - length, length)), prev_count + 1)
            # lengths are visited longest first, so equal keys keep the longer span
            if candidate < best[i]:
                best[i] = candidate
                back[i] = length
    if best[size] == inf:
        raise ValueError(f"a range of {size} frames cannot be tiled by lengths {sorted(lengths)}")
    spans = []
    i = size
    while i > 0:
        spans.append((start + i - back[i], back[i]))
        i -= back[i]
    spans.reverse()
    return Segmentation(start, stop, spans, best[size][0])


def enumerate_segmentations(size: int, allowed: Sequence[int]) -> Iterable[List[int]]:
    """Every ordered list of allowed lengths summing to `size` (small sizes only)."""
    if size == 0:
        yield []
        return
    for length in sorted(set(allowed)):
        if length <= size:
            for rest in enumerate_segmentations(size - length, allowed):
                yield [length] + rest
