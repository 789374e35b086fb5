# -*- coding: utf-8 -*-
"""Content-addressable vector memory.

Keys are 64-element vectors; values are episodic, program or consequent
payloads. Reads return the stored records whose keys are nearest to a
query key, approximately through one proximity graph per payload kind, or
exactly through a linear scan. A query equal to a stored key always finds
that record.
"""
# License: BSD 2 clause

import io
import logging
import struct
import numpy as np
from collections import defaultdict
from typing import Dict, Iterator, List, Mapping, Optional

from pyltm.memory.index import ProximityIndex
from pyltm.memory.records import (KEY_WIDTH, MemoryRecord, Payload, PayloadKind, Program, SearchHit, check_key,
                                  decode_payload, encode_payload)
from pyltm.utils.errors import TraceFormatError
from pyltm.utils.serialization import Reader
from pyltm.utils.tools import ReadWriteLock, make_rng

logger = logging.getLogger(__name__)

MAGIC = b"VMEM"
VERSION = 1
EUCLIDEAN = 0

_HEADER = struct.Struct("<HBQQQ")
_RECORD_HEAD = struct.Struct("<Q")
_RECORD_TAIL = struct.Struct("<BI")
_TIMESTAMP = struct.Struct("<Q")


class VectorMemory(object):
    """Key-value memory with nearest-key reads.

    Parameters
    ----------
    max_degree : int, optional (default=16)
    ef_construction : int, optional (default=100)
    ef_search : int, optional (default=64)
        Proximity graph parameters, see :class:`ProximityIndex`.
    compaction : float, optional (default=0.25)
        A kind's graph is rebuilt once this fraction of its entries are
        deleted records.
    seed : int, optional (default=0)

    Examples
    --------
    >>> from pyltm.memory.records import Program
    >>> memory = VectorMemory()
    >>> rid = memory.write(np.ones(64), Program(0))
    >>> memory.read(np.ones(64), 1)[0].record.id == rid
    True
    """

    def __init__(self, max_degree: int = 16, ef_construction: int = 100, ef_search: int = 64,
                 compaction: float = 0.25, seed: int = 0) -> None:
        self.max_degree = max_degree
        self.ef_construction = ef_construction
        self.ef_search = ef_search
        self.compaction = compaction
        self.seed = seed
        self._records: Dict[int, MemoryRecord] = {}
        self._indexes: Dict[PayloadKind, ProximityIndex] = {}
        self._exact: Dict[bytes, List[int]] = defaultdict(list)
        self._rebuilds: Dict[PayloadKind, int] = defaultdict(int)
        self._next_id = 0
        self._clock = 0
        self._lock = ReadWriteLock()

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, record_id: int) -> bool:
        return record_id in self._records

    def count(self, kind: Optional[PayloadKind] = None) -> int:
        with self._lock.read():
            if kind is None:
                return len(self._records)
            return sum(1 for r in self._records.values() if r.kind == kind)

    def records(self, kind: Optional[PayloadKind] = None) -> Iterator[MemoryRecord]:
        """Live records in id order (a snapshot)."""
        with self._lock.read():
            found = [self._records[i] for i in sorted(self._records)
                     if kind is None or self._records[i].kind == kind]
        return iter(found)

    def get(self, record_id: int) -> MemoryRecord:
        return self._records[record_id]

    def _new_index(self, kind: PayloadKind) -> ProximityIndex:
        seed = int(make_rng(self.seed, "index", int(kind), self._rebuilds[kind]).integers(2 ** 62))
        return ProximityIndex(self.max_degree, self.ef_construction, self.ef_search, seed=seed)

    # -- writes ------------------------------------------------------------------

    def _insert(self, record: MemoryRecord) -> None:
        index = self._indexes.get(record.kind)
        if index is None:
            index = self._indexes[record.kind] = self._new_index(record.kind)
        index.add(record.id, record.key)
        self._records[record.id] = record
        self._exact[record.key.tobytes()].append(record.id)

    def write(self, key, value: Payload) -> int:
        """Store a (key, payload) pair and return the new record id.

        Duplicate keys are kept as separate records.

        Raises
        ------
        ShapeError, NonFiniteError
            On a malformed key; nothing is stored.
        """
        key = check_key(key)
        if not hasattr(value, "kind"):
            raise TypeError(f"unsupported payload type {type(value).__name__}")
        with self._lock.write():
            record = MemoryRecord(self._next_id, key, value, self._clock)
            try:
                self._insert(record)
            except Exception:
                self._discard(record.id)
                raise
            self._next_id += 1
            self._clock += 1
        return record.id

    def _discard(self, record_id: int) -> None:
        record = self._records.pop(record_id, None)
        for index in self._indexes.values():
            if record_id in index.vectors:
                index.vectors.pop(record_id, None)
                for layer in index.layers:
                    if record_id in layer:
                        layer.remove_node(record_id)
                if index.entry == record_id:
                    index.entry = next(iter(index.vectors), None)
        if record is not None:
            ids = self._exact.get(record.key.tobytes(), [])
            if record_id in ids:
                ids.remove(record_id)

    def delete(self, record_id: int) -> bool:
        """Remove a record. Returns False when the id is unknown or already gone."""
        with self._lock.write():
            record = self._records.pop(record_id, None)
            if record is None:
                return False
            bucket = self._exact[record.key.tobytes()]
            bucket.remove(record_id)
            if not bucket:
                del self._exact[record.key.tobytes()]
            index = self._indexes[record.kind]
            index.remove(record_id)
            if len(index.deleted) >= self.compaction * len(index.vectors):
                self._rebuild(record.kind)
            self._clock += 1
        return True

    def _rebuild(self, kind: PayloadKind) -> None:
        old = self._indexes[kind]
        self._rebuilds[kind] += 1
        index = self._new_index(kind)
        for record_id in sorted(old.ids):
            index.add(record_id, self._records[record_id].key)
        self._indexes[kind] = index
        logger.debug("compacted %s index: dropped %d tombstones, %d live", kind.name, len(old.deleted), len(index))

    def replace_program_keys(self, keys: Mapping[int, np.ndarray]) -> List[int]:
        """Replace every Program record by one record per given program key."""
        stale = [r.id for r in self.records(PayloadKind.PROGRAM)]
        for record_id in stale:
            self.delete(record_id)
        return [self.write(key, Program(int(pid))) for pid, key in sorted(keys.items())]

    # -- reads -------------------------------------------------------------------------

    def read(self, key, k: int, kind: Optional[PayloadKind] = None) -> List[SearchHit]:
        """Up to `k` records nearest to `key`, by ascending distance.

        Approximate; records whose key equals `key` are always included.
        Ties are ordered by record id.

        Raises
        ------
        ValueError
            If k < 1.
        """
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        key = check_key(key)
        with self._lock.read():
            kinds = list(self._indexes) if kind is None else [kind]
            found = {}
            for record_id in self._exact.get(key.tobytes(), []):
                if kind is None or self._records[record_id].kind == kind:
                    found[record_id] = 0.0
            for each in kinds:
                index = self._indexes.get(each)
                if index is None:
                    continue
                for entry in index.search(key, k):
                    found.setdefault(entry.index, entry.distance)
            ranked = sorted((d, i) for i, d in found.items())[:k]
            return [SearchHit(float(d), self._records[i]) for d, i in ranked]

    def read_exact(self, key, k: int, kind: Optional[PayloadKind] = None) -> List[SearchHit]:
        """Exact top-`k` by linear scan; ties go to the lower record id."""
        if k < 1:
            raise ValueError(f"k must be at least 1, got {k}")
        key = check_key(key)
        with self._lock.read():
            ids = [i for i in sorted(self._records) if kind is None or self._records[i].kind == kind]
            if not ids:
                return []
            keys = np.stack([self._records[i].key for i in ids])
            distances = np.linalg.norm(keys - key, axis=1)
            order = np.lexsort((np.asarray(ids), distances))[:k]
            return [SearchHit(float(distances[j]), self._records[ids[j]]) for j in order]

    # -- persistence -----------------------------------------------------------------

    def to_bytes(self) -> bytes:
        """The records in the ``VMEM`` snapshot format (little-endian)."""
        with self._lock.read():
            out = io.BytesIO()
            out.write(MAGIC)
            out.write(_HEADER.pack(VERSION, EUCLIDEAN, len(self._records), self._next_id, self._clock))
            for record_id in sorted(self._records):
                record = self._records[record_id]
                payload = encode_payload(record.value)
                out.write(_RECORD_HEAD.pack(record.id))
                out.write(np.asarray(record.key, dtype="<f8").tobytes())
                out.write(_RECORD_TAIL.pack(int(record.kind), len(payload)))
                out.write(payload)
                out.write(_TIMESTAMP.pack(record.timestamp))
            return out.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, **params) -> "VectorMemory":
        """Rebuild a memory from :meth:`to_bytes` output.

        Raises
        ------
        TraceFormatError
            On a wrong magic, version or metric, or on truncation.
        """
        reader = Reader(data, "memory snapshot")
        magic = reader.take(4)
        if magic != MAGIC:
            raise TraceFormatError(f"bad magic for memory snapshot: expected {MAGIC!r}, got {magic!r}")
        version, metric, count, next_id, clock = reader.unpack(_HEADER)
        if version != VERSION:
            raise TraceFormatError(f"unsupported memory snapshot version {version} (expected {VERSION})")
        if metric != EUCLIDEAN:
            raise TraceFormatError(f"unsupported distance metric tag {metric}")
        memory = cls(**params)
        for _ in range(count):
            (record_id,) = reader.unpack(_RECORD_HEAD)
            key = np.frombuffer(reader.take(8 * KEY_WIDTH), dtype="<f8").astype(np.float64)
            key.flags.writeable = False
            tag, length = reader.unpack(_RECORD_TAIL)
            payload = decode_payload(tag, Reader(reader.take(length), "memory payload"))
            (timestamp,) = reader.unpack(_TIMESTAMP)
            memory._insert(MemoryRecord(record_id, key, payload, timestamp))
        memory._next_id = next_id
        memory._clock = clock
        return memory

    def save(self, path: str) -> None:
        with open(path, "wb") as file:
            file.write(self.to_bytes())

    @classmethod
    def load(cls, path: str, **params) -> "VectorMemory":
        with open(path, "rb") as file:
            return cls.from_bytes(file.read(), **params)

    def stats(self) -> Dict[str, int]:
        """Record counts by payload kind."""
        with self._lock.read():
            counts = {kind.name.lower(): 0 for kind in PayloadKind}
            for record in self._records.values():
                counts[record.kind.name.lower()] += 1
            counts["total"] = len(self._records)
            return counts
