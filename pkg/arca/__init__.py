"""Presburger arithmetic with arrays and counting: decision procedures and a model checker."""

from .formula import NameSupply
from .general import decide_eflat
from .mcheck import bmc, invariant_check, load_system
from .oracle import Bounds, find_model
from .parser import parse, to_text
from .semantics import FiniteModel, eval_finite
from .simple import Mode, decide_simple
from .verdict import Status, Verdict

__all__ = [
    'Bounds', 'FiniteModel', 'Mode', 'NameSupply', 'Status', 'Verdict',
    'bmc', 'decide_eflat', 'decide_simple', 'eval_finite', 'find_model', 'invariant_check',
    'load_system', 'parse', 'to_text',
]
