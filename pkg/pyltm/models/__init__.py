# -*- coding: utf-8 -*-
"""Make certain classes from the submodules available to the user as
direct imports from the `pyltm.models` namespace.
"""
from pyltm.models.bank import ProgramBank
from pyltm.models.continuation import ContinuationCoder
from pyltm.models.explain import ExplainAwayEncoder
from pyltm.models.keyclass import KeyClassifier
from pyltm.models.lifelong import LifelongLearner, load_model, save_model

__all__ = ["ProgramBank", "ContinuationCoder", "ExplainAwayEncoder", "KeyClassifier", "LifelongLearner",
           "load_model", "save_model"]
