# -*- coding: utf-8 -*-
"""Base class for all trainable components
"""
# License: BSD 2 clause

import abc
import numpy as np
from typing import Any


class BaseLearner(object, metaclass=abc.ABCMeta):
    """Abstract class for the learners of pyltm.

    Constructor arguments are stored unchanged; everything learned by `fit`
    lives in attributes with a trailing underscore.
    """

    @abc.abstractmethod
    def __init__(self) -> None:
        pass

    @abc.abstractmethod
    def fit(self, data: Any, **kwargs) -> object:
        """Fit the learner on unlabeled data.

        Parameters
        ----------
        data : array-like
            Windows of shape (n_windows, length, width) or a frame stream
            of shape (n_frames, width), depending on the learner.

        Returns
        -------
        self : object
            Fitted learner.
        """
        pass

    @abc.abstractmethod
    def decision_function(self, windows: np.ndarray) -> Any:
        """Apply the fitted learner to windows.

        Parameters
        ----------
        windows : ndarray of shape (n_windows, length, width)

        Returns
        -------
        decisions : The per-window output of the learner.
        """
        pass

    def __repr__(self):
        class_name = self.__class__.__name__
        return f"{class_name}"
