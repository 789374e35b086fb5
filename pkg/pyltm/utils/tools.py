# -*- coding: utf-8 -*-
"""A set of utility functions shared by the learners and the memory.
"""
# License: BSD 2 clause

import os
import random
import threading
import zlib
from contextlib import contextmanager
from inspect import isclass
from typing import Any, Iterator, List, Tuple, Union

import numpy as np


def set_seed(manual_seed: int) -> None:
    """Set random seeds of the global generators
    """
    random.seed(manual_seed)
    os.environ['PYTHONHASHSEED'] = str(manual_seed)
    np.random.seed(manual_seed % (2 ** 32))


def make_rng(seed: int, *stream: Union[int, str]) -> np.random.Generator:
    """Create an independent generator for one purpose of one experiment.

    Parameters
    ----------
    seed : int
        The experiment seed.
    stream : int or str
        Tags naming the purpose ("mask", "program", 3, ...). Strings are
        hashed with crc32 so the mapping does not depend on PYTHONHASHSEED.

    Returns
    -------
    rng : numpy.random.Generator
    """
    words = [int(seed) % (2 ** 63)]
    for tag in stream:
        if isinstance(tag, str):
            words.append(zlib.crc32(tag.encode("utf-8")))
        else:
            words.append(int(tag) % (2 ** 63))
    return np.random.default_rng(np.random.SeedSequence(words))


def check_is_fitted(
        learner: Any,
        attrs: Union[str, List[str], Tuple[str]] = None,
        msg: str = None,
        all_or_any: Union[all, any] = all) -> None:
    """Perform is_fitted validation for a learner.

    The learner is fitted when the given attributes (or, if `attrs` is None,
    any attribute ending with a single trailing underscore) are set.

    Parameters
    ----------
    learner : learner instance
    attrs : str, list or tuple of str, default=None
        Attribute name(s) that must hold a value other than None.
    msg : str, default=None
        Custom message, "%(name)s" is substituted by the class name.
    all_or_any : callable, {all, any}, default=all

    Raises
    ------
    TypeError
        If `learner` is a class or has no `fit` method.
    RuntimeError
        If the learner is not fitted.
    """
    if isclass(learner):
        raise TypeError(f"{learner} is a class, not an instance.")
    if not hasattr(learner, "fit"):
        raise TypeError(f"{learner} is not a learner instance.")
    if msg is None:
        msg = ("This %(name)s instance is not fitted yet. Call 'fit' with "
               "appropriate arguments before using this learner.")

    if attrs is not None:
        if not isinstance(attrs, (list, tuple)):
            attrs = [attrs]
        fitted = all_or_any([getattr(learner, attr, None) is not None for attr in attrs])
    else:
        fitted = [v for v, value in vars(learner).items()
                  if v.endswith("_") and not v.startswith("__") and value is not None]

    if not fitted:
        raise RuntimeError(msg % {"name": type(learner).__name__})


class ReadWriteLock(object):
    """Many concurrent readers or one writer.
    """

    def __init__(self) -> None:
        self._cond = threading.Condition(threading.Lock())
        self._readers = 0
        self._writer = False

    @contextmanager
    def read(self) -> Iterator[None]:
        with self._cond:
            while self._writer:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if self._readers == 0:
                    self._cond.notify_all()

    @contextmanager
    def write(self) -> Iterator[None]:
        with self._cond:
            while self._writer or self._readers:
                self._cond.wait()
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()
