# -*- coding: utf-8 -*-
"""Byte-level helpers for the model container and its sections.

A container is a 4-byte magic, a little-endian u16 format version, then a
sequence of sections. Each section is a 4-byte ASCII tag, a u64 payload
length and the payload. Array groups are stored as named ``.npy`` blobs,
metadata as canonical JSON, so writing the same objects twice gives the
same bytes.
"""
# License: BSD 2 clause

import io
import json
import struct
import numpy as np
from typing import Any, Dict, List, Tuple

from pyltm.utils.errors import TraceFormatError

_U16 = struct.Struct("<H")
_U64 = struct.Struct("<Q")


class Reader(object):
    """Cursor over a byte string that fails loudly on truncation."""

    def __init__(self, data: bytes, what: str = "file") -> None:
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, count: int) -> bytes:
        if self.pos + count > len(self.data):
            raise TraceFormatError(f"truncated {self.what}: expected at least {self.pos + count} bytes, "
                                   f"got {len(self.data)}")
        chunk = self.data[self.pos:self.pos + count]
        self.pos += count
        return chunk

    def unpack(self, fmt: struct.Struct) -> Tuple:
        return fmt.unpack(self.take(fmt.size))

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.data)


def pack_arrays(arrays: Dict[str, np.ndarray]) -> bytes:
    """Serialize named arrays in key order."""
    out = io.BytesIO()
    out.write(_U64.pack(len(arrays)))
    for name in sorted(arrays):
        blob = io.BytesIO()
        np.save(blob, np.ascontiguousarray(arrays[name]), allow_pickle=False)
        encoded = name.encode("utf-8")
        out.write(_U16.pack(len(encoded)))
        out.write(encoded)
        out.write(_U64.pack(len(blob.getvalue())))
        out.write(blob.getvalue())
    return out.getvalue()


def unpack_arrays(data: bytes) -> Dict[str, np.ndarray]:
    reader = Reader(data, "array group")
    (count,) = reader.unpack(_U64)
    arrays = {}
    for _ in range(count):
        (name_len,) = reader.unpack(_U16)
        name = reader.take(name_len).decode("utf-8")
        (blob_len,) = reader.unpack(_U64)
        try:
            arrays[name] = np.load(io.BytesIO(reader.take(blob_len)), allow_pickle=False)
        except ValueError as exc:
            raise TraceFormatError(f"corrupt array {name!r}: {exc}") from exc
    return arrays


def pack_json(meta: Any) -> bytes:
    return json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")


def unpack_json(data: bytes) -> Any:
    try:
        return json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TraceFormatError(f"corrupt metadata: {exc}") from exc


def pack_container(magic: bytes, version: int, sections: List[Tuple[bytes, bytes]]) -> bytes:
    out = io.BytesIO()
    out.write(magic)
    out.write(_U16.pack(version))
    for tag, payload in sections:
        if len(tag) != 4:
            raise ValueError(f"section tags have 4 bytes, got {tag!r}")
        out.write(tag)
        out.write(_U64.pack(len(payload)))
        out.write(payload)
    return out.getvalue()


def unpack_container(data: bytes, magic: bytes, version: int, what: str) -> Dict[bytes, bytes]:
    """Sections of a container by tag.

    Raises
    ------
    TraceFormatError
        On a wrong magic, an unsupported version or truncation.
    """
    reader = Reader(data, what)
    found = reader.take(len(magic))
    if found != magic:
        raise TraceFormatError(f"bad magic for {what}: expected {magic!r}, got {found!r}")
    (found_version,) = reader.unpack(_U16)
    if found_version != version:
        raise TraceFormatError(f"unsupported {what} version {found_version} (expected {version})")
    sections = {}
    while not reader.exhausted:
        tag = reader.take(4)
        (length,) = reader.unpack(_U64)
        sections[tag] = reader.take(length)
    return sections
