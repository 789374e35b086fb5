# -*- coding: utf-8 -*-
"""Content-addressable vector memory and its proximity index.
"""
from pyltm.memory.index import ProximityIndex
from pyltm.memory.records import Consequent, Episodic, MemoryRecord, PayloadKind, Program, SearchHit
from pyltm.memory.vmem import VectorMemory

__all__ = ["ProximityIndex", "Consequent", "Episodic", "MemoryRecord", "PayloadKind", "Program", "SearchHit",
           "VectorMemory"]
