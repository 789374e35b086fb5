# -*- coding: utf-8 -*-
"""Synthetic streams and trace files.
"""
from pyltm.data.generators import DomainSpec, LabeledStream, StreamScript, compose, generate
from pyltm.data.trace import load_trace, save_trace

__all__ = ["DomainSpec", "LabeledStream", "StreamScript", "compose", "generate", "load_trace", "save_trace"]
