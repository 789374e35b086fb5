# -*- coding: utf-8 -*-
"""Records of the vector memory and their binary payload codec.
"""
# License: BSD 2 clause

import struct
import numpy as np
from dataclasses import dataclass
from enum import IntEnum
from typing import Union

from pyltm.utils.errors import NonFiniteError, ShapeError, TraceFormatError
from pyltm.utils.serialization import Reader

KEY_WIDTH = 64


class PayloadKind(IntEnum):
    """Tag byte of a payload in memory files."""

    EPISODIC = 1
    PROGRAM = 2
    CONSEQUENT = 3


@dataclass(frozen=True, eq=False)
class Episodic(object):
    """One experienced window: its program, thought and stream position."""

    program: int
    thought: np.ndarray
    position: int
    length: int = 0

    kind = PayloadKind.EPISODIC


@dataclass(frozen=True)
class Program(object):
    """Points at a program vector of the bank (its key is the record key)."""

    program: int

    kind = PayloadKind.PROGRAM


@dataclass(frozen=True, eq=False)
class Consequent(object):
    """The thought and program of the window that followed the key's window."""

    thought: np.ndarray
    program: int

    kind = PayloadKind.CONSEQUENT


Payload = Union[Episodic, Program, Consequent]


@dataclass(frozen=True, eq=False)
class MemoryRecord(object):
    id: int
    key: np.ndarray
    value: Payload
    timestamp: int

    @property
    def kind(self) -> PayloadKind:
        return self.value.kind


@dataclass(frozen=True)
class SearchHit(object):
    """A record returned by a read, with its distance to the query."""

    distance: float
    record: MemoryRecord


def check_key(key) -> np.ndarray:
    """The key as a read-only float64 vector of width 64.

    Raises
    ------
    ShapeError
        On a wrong width.
    NonFiniteError
        On NaN or infinite entries.
    """
    key = np.array(key, dtype=np.float64, copy=True)
    if key.shape != (KEY_WIDTH,):
        raise ShapeError(f"keys have width {KEY_WIDTH}, got shape {np.shape(key)}")
    if not np.all(np.isfinite(key)):
        raise NonFiniteError("keys must be finite")
    key.flags.writeable = False
    return key


_EPISODIC = struct.Struct("<qQQI")
_PROGRAM = struct.Struct("<q")
_CONSEQUENT = struct.Struct("<qI")


def _vector(values: np.ndarray) -> bytes:
    return np.asarray(values, dtype="<f8").tobytes()


def encode_payload(value: Payload) -> bytes:
    if isinstance(value, Episodic):
        thought = np.asarray(value.thought).reshape(-1)
        return _EPISODIC.pack(value.program, value.position, value.length, thought.size) + _vector(thought)
    if isinstance(value, Program):
        return _PROGRAM.pack(value.program)
    if isinstance(value, Consequent):
        thought = np.asarray(value.thought).reshape(-1)
        return _CONSEQUENT.pack(value.program, thought.size) + _vector(thought)
    raise TypeError(f"unsupported payload type {type(value).__name__}")


def decode_payload(tag: int, reader: Reader) -> Payload:
    if tag == PayloadKind.EPISODIC:
        program, position, length, width = reader.unpack(_EPISODIC)
        thought = np.frombuffer(reader.take(8 * width), dtype="<f8").astype(np.float64)
        return Episodic(program, thought, position, length)
    if tag == PayloadKind.PROGRAM:
        (program,) = reader.unpack(_PROGRAM)
        return Program(program)
    if tag == PayloadKind.CONSEQUENT:
        program, width = reader.unpack(_CONSEQUENT)
        thought = np.frombuffer(reader.take(8 * width), dtype="<f8").astype(np.float64)
        return Consequent(thought, program)
    raise TraceFormatError(f"unknown payload tag {tag}")


def thought_key(thought) -> np.ndarray:
    """Memory key of a thought vector: the thought, zero-padded to width 64.

    Raises
    ------
    ShapeError
        If the thought is wider than a key.
    """
    thought = np.asarray(thought, dtype=np.float64).reshape(-1)
    if thought.size > KEY_WIDTH:
        raise ShapeError(f"thoughts of width {thought.size} do not fit {KEY_WIDTH}-wide keys")
    return check_key(np.concatenate([thought, np.zeros(KEY_WIDTH - thought.size)]))
