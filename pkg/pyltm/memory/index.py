# -*- coding: utf-8 -*-
"""Hierarchical navigable small-world graph for approximate nearest
neighbours under Euclidean distance.

Each layer is an undirected ``networkx.Graph``. Layer 0 holds every vector;
a vector reaches layer ``l`` with probability ``M ** -l``. A query descends
greedily from the top layer and runs a beam search of width ``ef`` on
layer 0. Neighbours are chosen with the diversity heuristic: a candidate
is linked only when it is closer to the new vector than to any neighbour
already chosen, and the list is then topped up with the closest rejects.
"""
# License: BSD 2 clause

import heapq
import logging
import math
import numpy as np
import networkx as nx
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Set

from pyltm.utils.tools import make_rng

logger = logging.getLogger(__name__)


@dataclass(order=True, frozen=True)
class DistanceEntry(object):
    """Priority-queue entry; ties on distance go to the lower id."""

    distance: float
    index: int


class ProximityIndex(object):
    """Approximate k-nearest-neighbour index over integer ids.

    Parameters
    ----------
    max_degree : int, optional (default=16)
        Links per vector on upper layers (M); layer 0 allows 2M.
    ef_construction : int, optional (default=100)
        Beam width while inserting.
    ef_search : int, optional (default=64)
        Beam width while querying (raised to k when k is larger).
    seed : int, optional (default=0)
        Seed of the level draws.

    Examples
    --------
    >>> index = ProximityIndex()
    >>> index.add(7, np.zeros(64))
    >>> [e.index for e in index.search(np.zeros(64), 1)]
    [7]
    """

    def __init__(self, max_degree: int = 16, ef_construction: int = 100, ef_search: int = 64,
                 seed: int = 0) -> None:
        if max_degree < 2:
            raise ValueError(f"max_degree must be at least 2, got {max_degree}")
        self.max_degree = max_degree
        self.ef_construction = ef_construction
        self.ef_search = ef_search
        self.seed = seed
        self.level_mult = 1.0 / math.log(max_degree)
        self.layers: List[nx.Graph] = []
        self.vectors: Dict[int, np.ndarray] = {}
        self.deleted: Set[int] = set()
        self.entry: Optional[int] = None
        self._rng = make_rng(seed, "levels")

    def __len__(self) -> int:
        return len(self.vectors) - len(self.deleted)

    def __contains__(self, index: int) -> bool:
        return index in self.vectors and index not in self.deleted

    @property
    def ids(self) -> Set[int]:
        """Live ids."""
        return set(self.vectors) - self.deleted

    def _distances(self, query: np.ndarray, ids: List[int]) -> np.ndarray:
        return np.linalg.norm(np.stack([self.vectors[i] for i in ids]) - query, axis=1)

    def _degree_cap(self, layer: int) -> int:
        return 2 * self.max_degree if layer == 0 else self.max_degree

    def _search_layer(self, query: np.ndarray, entries: Iterable[DistanceEntry], ef: int,
                      layer: int) -> List[DistanceEntry]:
        graph = self.layers[layer]
        candidates = list(entries)
        heapq.heapify(candidates)
        visited = {e.index for e in candidates}
        # max-heap of the best ef entries found so far
        best = [(-e.distance, -e.index) for e in candidates]
        heapq.heapify(best)
        while len(best) > ef:
            heapq.heappop(best)
        while candidates:
            current = heapq.heappop(candidates)
            if len(best) >= ef and current.distance > -best[0][0]:
                break
            fresh = [n for n in graph.neighbors(current.index) if n not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            for n, d in zip(fresh, self._distances(query, fresh)):
                d = float(d)
                if len(best) < ef or d < -best[0][0]:
                    heapq.heappush(candidates, DistanceEntry(d, n))
                    heapq.heappush(best, (-d, -n))
                    if len(best) > ef:
                        heapq.heappop(best)
        return sorted(DistanceEntry(-d, -i) for d, i in best)

    def _select(self, ranked: List[DistanceEntry], count: int) -> List[int]:
        chosen: List[int] = []
        rejected: List[int] = []
        for entry in ranked:
            if len(chosen) >= count:
                break
            if chosen and np.any(self._distances(self.vectors[entry.index], chosen) < entry.distance):
                rejected.append(entry.index)
            else:
                chosen.append(entry.index)
        for index in rejected:
            if len(chosen) >= count:
                break
            chosen.append(index)
        return chosen

    def _shrink(self, index: int, layer: int) -> None:
        graph = self.layers[layer]
        cap = self._degree_cap(layer)
        if graph.degree(index) <= cap:
            return
        neighbours = list(graph.neighbors(index))
        ranked = sorted(DistanceEntry(float(d), n) for n, d in
                        zip(neighbours, self._distances(self.vectors[index], neighbours)))
        keep = set(self._select(ranked, cap))
        graph.remove_edges_from((index, n) for n in neighbours if n not in keep)

    def add(self, index: int, vector: np.ndarray) -> None:
        """Insert a vector under a new id.

        Raises
        ------
        ValueError
            If the id is already present.
        """
        if index in self.vectors:
            raise ValueError(f"id {index} is already indexed")
        vector = np.asarray(vector, dtype=np.float64)
        level = int(-math.log(1.0 - self._rng.random()) * self.level_mult)
        while len(self.layers) <= level:
            self.layers.append(nx.Graph())
        self.vectors[index] = vector
        for layer in range(level + 1):
            self.layers[layer].add_node(index)

        if self.entry is None:
            self.entry = index
            return
        top = self._level_of(self.entry)
        entries = [DistanceEntry(float(np.linalg.norm(self.vectors[self.entry] - vector)), self.entry)]
        for layer in range(top, level, -1):
            entries = self._search_layer(vector, entries, 1, layer)[:1]
        for layer in range(min(top, level), -1, -1):
            found = self._search_layer(vector, entries, self.ef_construction, layer)
            for n in self._select(found, self.max_degree):
                self.layers[layer].add_edge(index, n)
                self._shrink(n, layer)
            entries = found
        if level > top:
            self.entry = index

    def _level_of(self, index: int) -> int:
        level = 0
        while level + 1 < len(self.layers) and index in self.layers[level + 1]:
            level += 1
        return level

    def remove(self, index: int) -> bool:
        """Tombstone an id: it is still traversed but never returned."""
        if index not in self.vectors or index in self.deleted:
            return False
        self.deleted.add(index)
        return True

    def search(self, query: np.ndarray, k: int, ef: Optional[int] = None) -> List[DistanceEntry]:
        """Up to `k` live ids nearest to `query`, by ascending distance."""
        if self.entry is None or k < 1 or not len(self):
            return []
        query = np.asarray(query, dtype=np.float64)
        beam = max(ef or self.ef_search, k)
        # tombstones still occupy beam slots
        beam += min(len(self.deleted), 4 * beam)
        entries = [DistanceEntry(float(np.linalg.norm(self.vectors[self.entry] - query)), self.entry)]
        for layer in range(self._level_of(self.entry), 0, -1):
            entries = self._search_layer(query, entries, 1, layer)[:1]
        found = self._search_layer(query, entries, beam, 0)
        return [e for e in found if e.index not in self.deleted][:k]

    def stats(self) -> Dict[str, float]:
        base = self.layers[0] if self.layers else nx.Graph()
        return {"vectors": len(self), "deleted": len(self.deleted), "layers": len(self.layers),
                "mean_degree": 2.0 * base.number_of_edges() / max(base.number_of_nodes(), 1)}
