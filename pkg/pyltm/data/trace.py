# -*- coding: utf-8 -*-
"""Reading and writing ``LTMT`` trace files.

Layout (little-endian)::

    magic "LTMT" | version u16 | D u32 | frame count u64 | encoding u8 | payload

Encoding 0 stores the frames as float64, row-major. Encoding 1 stores a
u32 number of action channels A, then the ``D - A`` bit channels of all
frames packed eight to a byte (row-major, least significant bit first),
then the action channels as float64.
"""
# License: BSD 2 clause

import struct
import numpy as np
from typing import List, Optional, Sequence

from pyltm.utils.converter import as_frames
from pyltm.utils.errors import TraceFormatError
from pyltm.utils.serialization import Reader

MAGIC = b"LTMT"
VERSION = 1
FLOAT64 = 0
BITPACKED = 1

_HEADER = struct.Struct("<HIQB")
_U32 = struct.Struct("<I")


def trace_to_bytes(frames, n_actions: int = 0, encoding: Optional[int] = None) -> bytes:
    """Serialize frames; `encoding` defaults to bit-packed when the bit
    channels hold only zeros and ones."""
    frames = as_frames(frames)
    count, width = frames.shape
    if not 0 <= n_actions <= width:
        raise ValueError(f"n_actions must lie in [0, {width}], got {n_actions}")
    bits = frames[:, :width - n_actions]
    binary = bool(np.all((bits == 0.0) | (bits == 1.0)))
    if encoding is None:
        encoding = BITPACKED if binary else FLOAT64
    header = MAGIC + _HEADER.pack(VERSION, width, count, encoding)
    if encoding == FLOAT64:
        return header + np.ascontiguousarray(frames, dtype="<f8").tobytes()
    if encoding == BITPACKED:
        if not binary:
            raise ValueError("bit-packed traces need bit channels in {0, 1}")
        packed = np.packbits(bits.astype(np.uint8).reshape(-1), bitorder="little")
        actions = np.ascontiguousarray(frames[:, width - n_actions:], dtype="<f8")
        return header + _U32.pack(n_actions) + packed.tobytes() + actions.tobytes()
    raise ValueError(f"unknown trace encoding {encoding}")


def trace_from_bytes(data: bytes) -> np.ndarray:
    """Frames of a serialized trace.

    Raises
    ------
    TraceFormatError
        On a bad magic, an unsupported version or encoding, truncation or
        trailing bytes.
    """
    reader = Reader(data, "trace")
    magic = reader.take(len(MAGIC))
    if magic != MAGIC:
        raise TraceFormatError(f"not a trace file: magic {magic!r}, expected {MAGIC!r}")
    version, width, count, encoding = reader.unpack(_HEADER)
    if version != VERSION:
        raise TraceFormatError(f"unsupported trace version {version}, expected {VERSION}")
    if encoding == FLOAT64:
        frames = np.frombuffer(reader.take(8 * width * count), dtype="<f8").reshape(count, width)
    elif encoding == BITPACKED:
        (n_actions,) = reader.unpack(_U32)
        if n_actions > width:
            raise TraceFormatError(f"trace declares {n_actions} action channels but only {width} channels")
        n_bits = width - n_actions
        packed = np.frombuffer(reader.take((n_bits * count + 7) // 8), dtype=np.uint8)
        bits = np.unpackbits(packed, count=n_bits * count, bitorder="little").reshape(count, n_bits)
        actions = np.frombuffer(reader.take(8 * n_actions * count), dtype="<f8").reshape(count, n_actions)
        frames = np.concatenate([bits.astype(np.float64), actions], axis=1)
    else:
        raise TraceFormatError(f"unknown trace encoding {encoding}")
    if not reader.exhausted:
        raise TraceFormatError(f"trace has {len(data) - reader.pos} trailing bytes after {count} frames")
    return np.array(frames, dtype=np.float64)


def save_trace(frames, path: str, n_actions: int = 0, encoding: Optional[int] = None) -> None:
    with open(path, "wb") as file:
        file.write(trace_to_bytes(frames, n_actions, encoding))


def load_trace(path: str) -> np.ndarray:
    with open(path, "rb") as file:
        return trace_from_bytes(file.read())


def labels_path(trace_path: str) -> str:
    return trace_path + ".labels"


def save_labels(labels: Sequence[str], path: str) -> None:
    """One domain name per frame, one per line."""
    with open(path, "w", encoding="utf-8") as file:
        file.writelines(f"{label}\n" for label in labels)


def load_labels(path: str) -> List[str]:
    with open(path, "r", encoding="utf-8") as file:
        return [line.rstrip("\n") for line in file if line.strip()]
