"""
Finite models and the reference evaluator.

Every other module is tested against `eval_finite`. Formulas are compiled
once into closures so that the bounded model finder can evaluate the same
formula over many candidate models cheaply.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import EvaluationError
from .formula import (
    And, Card, Cong, Eq, Exists, Lt, Mul, Neg, Not, Num, Param, Read, Sum, Var,
)


@dataclass(frozen=True)
class FiniteModel:
    """Values for N, parameters, free variables and arrays on [0, N)."""
    n: int
    params: Mapping[str, int] = field(default_factory=dict)
    vars: Mapping[str, int] = field(default_factory=dict)
    arrays: Mapping[str, Tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for name, values in self.arrays.items():
            if len(values) != max(self.n, 0):
                raise EvaluationError(
                    f"array {name} has {len(values)} entries, expected {max(self.n, 0)}")

    def read(self, array: str, index: int) -> int:
        if 0 <= index < self.n:
            return self.arrays[array][index]
        return 0

    def values(self) -> Dict[str, int]:
        out = dict(self.params)
        out.update(self.vars)
        out['N'] = self.n
        return out

    def permuted(self, perm: Sequence[int]) -> 'FiniteModel':
        """All arrays composed with the index permutation `perm`."""
        arrays = {a: tuple(v[perm[i]] for i in range(self.n)) for a, v in self.arrays.items()}
        return FiniteModel(self.n, dict(self.params), dict(self.vars), arrays)

    def describe(self) -> str:
        parts = [f"N = {self.n}"]
        parts += [f"{k} = {v}" for k, v in sorted(self.params.items())]
        parts += [f"{k} = {v}" for k, v in sorted(self.vars.items())]
        parts += [f"{k} = {list(v)}" for k, v in sorted(self.arrays.items())]
        return '\n'.join(parts)


class _Ctx:
    __slots__ = ('values', 'arrays', 'n', 'qrange')

    def __init__(self, values: Dict[str, int], arrays: Mapping[str, Sequence[int]], n: int,
                 qrange: Optional[Sequence[int]]):
        self.values = values
        self.arrays = arrays
        self.n = n
        self.qrange = qrange


_MISSING = object()


def _compile_term(t) -> Callable[[_Ctx], int]:
    if isinstance(t, Num):
        v = t.value
        return lambda c: v
    if isinstance(t, (Var, Param)):
        name = t.name

        def lookup(c):
            try:
                return c.values[name]
            except KeyError:
                raise EvaluationError(f"no value for symbol '{name}'") from None
        return lookup
    if isinstance(t, Sum):
        fs = [_compile_term(a) for a in t.args]
        return lambda c: sum(f(c) for f in fs)
    if isinstance(t, Neg):
        f = _compile_term(t.arg)
        return lambda c: -f(c)
    if isinstance(t, Mul):
        k, f = t.coeff, _compile_term(t.arg)
        return lambda c: k * f(c)
    if isinstance(t, Read):
        name, idx = t.array, _compile_term(t.index)

        def read(c):
            i = idx(c)
            if 0 <= i < c.n:
                try:
                    return c.arrays[name][i]
                except KeyError:
                    raise EvaluationError(f"no value for array '{name}'") from None
            return 0
        return read
    if isinstance(t, Card):
        var, body = t.var, _compile_formula(t.body)

        def count(c):
            saved = c.values.get(var, _MISSING)
            total = 0
            for i in range(c.n):
                c.values[var] = i
                if body(c):
                    total += 1
            _restore(c, var, saved)
            return total
        return count
    raise TypeError(f"not a term: {t!r}")


def _restore(c: _Ctx, var: str, saved) -> None:
    if saved is _MISSING:
        c.values.pop(var, None)
    else:
        c.values[var] = saved


def _compile_formula(f) -> Callable[[_Ctx], bool]:
    if isinstance(f, Lt):
        l, r = _compile_term(f.left), _compile_term(f.right)
        return lambda c: l(c) < r(c)
    if isinstance(f, Eq):
        l, r = _compile_term(f.left), _compile_term(f.right)
        return lambda c: l(c) == r(c)
    if isinstance(f, Cong):
        m, l, r = f.modulus, _compile_term(f.left), _compile_term(f.right)
        return lambda c: (l(c) - r(c)) % m == 0
    if isinstance(f, And):
        fs = [_compile_formula(a) for a in f.args]
        return lambda c: all(g(c) for g in fs)
    if isinstance(f, Not):
        g = _compile_formula(f.arg)
        return lambda c: not g(c)
    if isinstance(f, Exists):
        var, body = f.var, _compile_formula(f.body)

        def ex(c):
            if c.qrange is None:
                raise EvaluationError(f"quantifier over '{var}' needs a bounded range")
            saved = c.values.get(var, _MISSING)
            found = False
            for v in c.qrange:
                c.values[var] = v
                if body(c):
                    found = True
                    break
            _restore(c, var, saved)
            return found
        return ex
    raise TypeError(f"not a formula: {f!r}")


@lru_cache(maxsize=1024)
def compile_formula(f) -> Callable[[_Ctx], bool]:
    return _compile_formula(f)


def quantifier_range(n: int, bound: int) -> List[int]:
    """[−bound, bound] ∪ [0, n)."""
    return sorted(set(range(-bound, bound + 1)) | set(range(0, max(n, 0))))


def make_context(model: FiniteModel, qrange: Optional[Iterable[int]] = None) -> _Ctx:
    return _Ctx(model.values(), model.arrays, model.n, list(qrange) if qrange is not None else None)


def eval_finite(phi, model: FiniteModel, bound: Optional[int] = None,
                qrange: Optional[Iterable[int]] = None) -> bool:
    """Truth of phi in `model`; quantifiers range over `qrange` (or the default for `bound`)."""
    if qrange is None and bound is not None:
        qrange = quantifier_range(model.n, bound)
    return bool(compile_formula(phi)(make_context(model, qrange)))


def eval_term(t, model: FiniteModel, bound: Optional[int] = None) -> int:
    qrange = quantifier_range(model.n, bound) if bound is not None else None
    return _compile_term(t)(make_context(model, qrange))
