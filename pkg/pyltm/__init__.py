# -*- coding: utf-8 -*-
"""
PyLTM
=====

PyLTM is a Python library for lifelong sequence memory: a bank of program
vectors, stretched by a hypernetwork into LSTM autoencoders, compresses an
unlabeled stream into thought vectors kept in a content-addressable vector
memory.
"""

__version__ = '0.1.0'

from pyltm import data
from pyltm import memory
from pyltm import models

__all__ = ["data", "memory", "models"]
