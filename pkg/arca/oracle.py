"""
Bounded brute-force model finder.

Used as ground truth for the test suites: it enumerates every model with
N ≤ n_max and all values in [-B, B]. A miss says nothing about models
outside those bounds.
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Optional

from .config import Config
from .errors import ResourceLimitError
from .parser import SymbolTable
from .semantics import FiniteModel, compile_formula, make_context, quantifier_range
from .verdict import Verdict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Bounds:
    n_max: int = 3
    bound: int = 2
    quantifier_bound: Optional[int] = None

    def __post_init__(self):
        if self.n_max < 0 or self.bound < 0:
            raise ValueError(f"bounds must be non-negative, got n_max={self.n_max}, bound={self.bound}")

    @property
    def qbound(self) -> int:
        return self.bound if self.quantifier_bound is None else self.quantifier_bound

    def qrange(self):
        """[−q, max(n_max, q)]."""
        return range(-self.qbound, max(self.n_max, self.qbound) + 1)


def search_space(symbols: SymbolTable, b: Bounds) -> int:
    """Number of candidate models: (2B+1)^scalars · Σ_n (2B+1)^(n·arrays)."""
    width = 2 * b.bound + 1
    scalars = len(symbols.params - {'N'}) + len(symbols.vars)
    arrays = len(symbols.arrays)
    return width ** scalars * sum(width ** (n * arrays) for n in range(b.n_max + 1))


def candidates(symbols: SymbolTable, b: Bounds) -> Iterator[FiniteModel]:
    """N ascending, then lexicographic over scalar values, then over array entries."""
    params = sorted(symbols.params - {'N'})
    vars_ = sorted(symbols.vars)
    arrays = sorted(symbols.arrays)
    values = range(-b.bound, b.bound + 1)
    for n in range(b.n_max + 1):
        for scalars in product(values, repeat=len(params) + len(vars_)):
            p = dict(zip(params, scalars[:len(params)]))
            v = dict(zip(vars_, scalars[len(params):]))
            for entries in product(values, repeat=n * len(arrays)):
                arrs = {a: tuple(entries[i * n:(i + 1) * n]) for i, a in enumerate(arrays)}
                yield FiniteModel(n, p, v, arrs)


def find_model(phi, b: Optional[Bounds] = None, symbols: Optional[SymbolTable] = None,
               cap: Optional[int] = None) -> Optional[FiniteModel]:
    """First model of phi within b, or None."""
    b = b or Bounds()
    cap = cap or Config.ORACLE_CAP
    symbols = SymbolTable.of(phi) if symbols is None else symbols.union(SymbolTable.of(phi))
    size = search_space(symbols, b)
    if size > cap:
        raise ResourceLimitError(f"oracle search space {size} exceeds the cap {cap}")
    check = compile_formula(phi)
    qrange = list(b.qrange())
    for model in candidates(symbols, b):
        if check(make_context(model, qrange)):
            logger.debug(f"oracle model found at N = {model.n}")
            return model
    logger.debug(f"no bounded model among {size} candidate(s)")
    return None


@dataclass(frozen=True)
class CrossCheck:
    contradiction: bool
    outcome: str
    model: Optional[FiniteModel] = None

    def __str__(self) -> str:
        return f"{'CONTRADICTION ' if self.contradiction else ''}{self.outcome}"


def crosscheck(phi, v: Verdict, b: Optional[Bounds] = None, symbols: Optional[SymbolTable] = None,
               cap: Optional[int] = None) -> CrossCheck:
    """Compare a verdict with the bounded search; a model carried by v is checked directly."""
    b = b or Bounds()
    if v.is_sat and v.model is not None:
        reach = max([abs(x) for x in v.model.values().values()] + [b.qbound]) + 1
        qrange = quantifier_range(v.model.n, reach)
        if compile_formula(phi)(make_context(v.model, qrange)):
            return CrossCheck(False, 'certificate-sat', v.model)
        logger.error("the model carried by a sat verdict does not satisfy the formula")
        return CrossCheck(True, 'certificate-model-fails', v.model)
    model = find_model(phi, b, symbols, cap)
    if model is None:
        return CrossCheck(False, f"oracle-none/solver-{v.status}")
    if v.is_unsat:
        logger.error(f"unsat verdict but the oracle found a model:\n{model.describe()}")
        return CrossCheck(True, 'oracle-sat/solver-unsat', model)
    return CrossCheck(False, f"oracle-sat/solver-{v.status}", model)
