"""
Formula and term AST for Presburger arithmetic with arrays and counting.

Nodes are frozen dataclasses: hashable, comparable by structure and safe to
share. Derived connectives (or, implies, forall, <=, ...) are expressed with
the core ones; the constructors below build them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Mapping, NamedTuple, Optional, Set, Tuple, Union


class _Node:
    __slots__ = ()

    def __str__(self) -> str:
        from .parser import to_text
        return to_text(self)


# -- terms -------------------------------------------------------------------

@dataclass(frozen=True, eq=True)
class Num(_Node):
    value: int


@dataclass(frozen=True, eq=True)
class Var(_Node):
    name: str


@dataclass(frozen=True, eq=True)
class Param(_Node):
    name: str


@dataclass(frozen=True, eq=True)
class Sum(_Node):
    args: Tuple['Term', ...]


@dataclass(frozen=True, eq=True)
class Neg(_Node):
    arg: 'Term'


@dataclass(frozen=True, eq=True)
class Mul(_Node):
    coeff: int
    arg: 'Term'


@dataclass(frozen=True, eq=True)
class Read(_Node):
    array: str
    index: 'Term'


@dataclass(frozen=True, eq=True)
class Card(_Node):
    """Number of values of `var` in [0, N) satisfying `body`."""
    var: str
    body: 'Formula'


Term = Union[Num, Var, Param, Sum, Neg, Mul, Read, Card]
TERM_TYPES = (Num, Var, Param, Sum, Neg, Mul, Read, Card)


# -- formulas ----------------------------------------------------------------

@dataclass(frozen=True, eq=True)
class Lt(_Node):
    left: Term
    right: Term


@dataclass(frozen=True, eq=True)
class Eq(_Node):
    left: Term
    right: Term


@dataclass(frozen=True, eq=True)
class Cong(_Node):
    """left ≡ right (mod modulus)."""
    modulus: int
    left: Term
    right: Term

    def __post_init__(self):
        if not isinstance(self.modulus, int) or self.modulus < 1:
            raise ValueError(f"congruence modulus must be an integer >= 1, got {self.modulus!r}")


@dataclass(frozen=True, eq=True)
class And(_Node):
    args: Tuple['Formula', ...]


@dataclass(frozen=True, eq=True)
class Not(_Node):
    arg: 'Formula'


@dataclass(frozen=True, eq=True)
class Exists(_Node):
    var: str
    body: 'Formula'


Formula = Union[Lt, Eq, Cong, And, Not, Exists]
FORMULA_TYPES = (Lt, Eq, Cong, And, Not, Exists)
ATOM_TYPES = (Lt, Eq, Cong)

TRUE: Formula = And(())
FALSE: Formula = Not(TRUE)
N = Param('N')
ZERO = Num(0)
ONE = Num(1)


# -- constructors ------------------------------------------------------------

def num(value: int) -> Num:
    return Num(int(value))


def plus(*terms: Term) -> Term:
    flat = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.args)
        elif not (isinstance(t, Num) and t.value == 0):
            flat.append(t)
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def minus(left: Term, right: Term) -> Term:
    return plus(left, times(-1, right))


def times(k: int, term: Term) -> Term:
    if k == 0:
        return ZERO
    if k == 1:
        return term
    if isinstance(term, Num):
        return Num(k * term.value)
    if isinstance(term, Mul):
        return times(k * term.coeff, term.arg)
    return Mul(k, term)


def is_true(f: Formula) -> bool:
    return f == TRUE


def is_false(f: Formula) -> bool:
    return f == FALSE


def neg(f: Formula) -> Formula:
    """Negation with double negations removed."""
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def conj(*fs: Formula) -> Formula:
    args = []
    for f in fs:
        if isinstance(f, And):
            parts = f.args
        else:
            parts = (f,)
        for p in parts:
            if is_false(p):
                return FALSE
            if p not in args:
                args.append(p)
    if len(args) == 1:
        return args[0]
    return And(tuple(args))


def disjuncts(f: Formula) -> Tuple[Formula, ...]:
    """Top-level disjuncts, reading not(and ...) as a disjunction."""
    if isinstance(f, Not) and isinstance(f.arg, And):
        return tuple(neg(a) for a in f.arg.args)
    return (f,)


def disj(*fs: Formula) -> Formula:
    args = []
    for f in fs:
        if is_true(f):
            return TRUE
        for d in disjuncts(f):
            if d not in args:
                args.append(d)
    if len(args) == 1:
        return args[0]
    return Not(And(tuple(neg(a) for a in args)))


def implies(a: Formula, b: Formula) -> Formula:
    return disj(neg(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return conj(implies(a, b), implies(b, a))


def exists(names: Iterable[str], body: Formula) -> Formula:
    for name in reversed(list(names)):
        body = Exists(name, body)
    return body


def forall(name: str, body: Formula) -> Formula:
    return Not(Exists(name, neg(body)))


def le(a: Term, b: Term) -> Formula:
    return Not(Lt(b, a))


def ge(a: Term, b: Term) -> Formula:
    return Not(Lt(a, b))


def gt(a: Term, b: Term) -> Formula:
    return Lt(b, a)


def ne(a: Term, b: Term) -> Formula:
    return Not(Eq(a, b))


# -- traversal ---------------------------------------------------------------

def children(node) -> Tuple:
    if isinstance(node, (Sum, And)):
        return node.args
    if isinstance(node, (Neg, Not)):
        return (node.arg,)
    if isinstance(node, Mul):
        return (node.arg,)
    if isinstance(node, Read):
        return (node.index,)
    if isinstance(node, (Card, Exists)):
        return (node.body,)
    if isinstance(node, (Lt, Eq, Cong)):
        return (node.left, node.right)
    return ()


def walk(node) -> Iterator:
    """Pre-order iteration over every term and formula node."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def contains(node, kinds) -> bool:
    return any(isinstance(n, kinds) for n in walk(node))


class Symbols(NamedTuple):
    vars: frozenset
    params: frozenset
    arrays: frozenset


def free_symbols(node) -> Symbols:
    """Free variables, parameters and arrays of a term or formula."""
    vs: Set[str] = set()
    ps: Set[str] = set()
    arrs: Set[str] = set()

    def visit(n, bound: frozenset):
        if isinstance(n, Var):
            if n.name not in bound:
                vs.add(n.name)
        elif isinstance(n, Param):
            ps.add(n.name)
        elif isinstance(n, Read):
            arrs.add(n.array)
            visit(n.index, bound)
        elif isinstance(n, (Card, Exists)):
            visit(n.body, bound | {n.var})
        else:
            for c in children(n):
                visit(c, bound)

    visit(node, frozenset())
    return Symbols(frozenset(vs), frozenset(ps), frozenset(arrs))


def free_vars(node) -> frozenset:
    return free_symbols(node).vars


def all_names(node) -> Set[str]:
    """Every name mentioned, free or bound."""
    names: Set[str] = set()
    for n in walk(node):
        if isinstance(n, (Var, Param)):
            names.add(n.name)
        elif isinstance(n, Read):
            names.add(n.array)
        elif isinstance(n, (Card, Exists)):
            names.add(n.var)
    return names


class NameSupply:
    """Fresh `base!k` names that avoid every name registered so far."""

    def __init__(self, taken: Iterable[str] = ()):
        self._taken: Set[str] = set(taken)
        self._counters: Dict[str, int] = {}

    def reserve(self, names: Iterable[str]) -> None:
        self._taken.update(names)

    def fresh(self, base: str) -> str:
        k = self._counters.get(base, 0)
        while True:
            k += 1
            name = f"{base}!{k}"
            if name not in self._taken:
                break
        self._counters[base] = k
        self._taken.add(name)
        return name

    def __contains__(self, name: str) -> bool:
        return name in self._taken


def base_name(name: str) -> str:
    return name.split('!', 1)[0]


def fresh_name(name: str, avoid: Set[str]) -> str:
    base = base_name(name)
    k = 1
    while f"{base}!{k}" in avoid:
        k += 1
    return f"{base}!{k}"


# -- substitution ------------------------------------------------------------

def substitute(phi, x: str, u: Term):
    """phi with the free occurrences of variable x replaced by u, without capture."""
    return substitute_many(phi, {x: u})


def substitute_many(phi, mapping: Mapping[str, Term]):
    """Simultaneous capture-avoiding substitution of variables (and parameters) by terms."""
    if not mapping:
        return phi
    return _subst(phi, dict(mapping))


def _mapping_names(mapping: Mapping[str, Term]) -> Set[str]:
    names: Set[str] = set(mapping)
    for t in mapping.values():
        names |= free_vars(t)
    return names


def _subst(n, mapping: Dict[str, Term]):
    if isinstance(n, (Var, Param)):
        return mapping.get(n.name, n)
    if isinstance(n, Num):
        return n
    if isinstance(n, Sum):
        return Sum(tuple(_subst(a, mapping) for a in n.args))
    if isinstance(n, Neg):
        return Neg(_subst(n.arg, mapping))
    if isinstance(n, Mul):
        return Mul(n.coeff, _subst(n.arg, mapping))
    if isinstance(n, Read):
        return Read(n.array, _subst(n.index, mapping))
    if isinstance(n, Lt):
        return Lt(_subst(n.left, mapping), _subst(n.right, mapping))
    if isinstance(n, Eq):
        return Eq(_subst(n.left, mapping), _subst(n.right, mapping))
    if isinstance(n, Cong):
        return Cong(n.modulus, _subst(n.left, mapping), _subst(n.right, mapping))
    if isinstance(n, And):
        return And(tuple(_subst(a, mapping) for a in n.args))
    if isinstance(n, Not):
        return Not(_subst(n.arg, mapping))
    if isinstance(n, (Card, Exists)):
        inner = {k: v for k, v in mapping.items() if k != n.var}
        if not inner:
            return n
        fs = free_symbols(n.body)
        inner = {k: v for k, v in inner.items() if k in fs.vars or k in fs.params}
        if not inner:
            return n
        var, body = n.var, n.body
        captured = any(var in free_vars(v) for v in inner.values())
        if captured:
            new = fresh_name(var, all_names(body) | _mapping_names(inner))
            body = _subst(body, {var: Var(new)})
            var = new
        return type(n)(var, _subst(body, inner))
    raise TypeError(f"not a formula or term: {n!r}")


def replace_terms(phi, mapping: Mapping[Term, Term]):
    """Replace whole subterms (array reads, counting terms) by other terms.

    A key is not matched below a binder that binds one of its free variables.
    """
    if not mapping:
        return phi
    return _replace(phi, dict(mapping))


def _replace(n, mapping: Dict):
    if isinstance(n, TERM_TYPES) and n in mapping:
        return mapping[n]
    if isinstance(n, (Num, Var, Param)):
        return n
    if isinstance(n, Sum):
        return Sum(tuple(_replace(a, mapping) for a in n.args))
    if isinstance(n, Neg):
        return Neg(_replace(n.arg, mapping))
    if isinstance(n, Mul):
        return Mul(n.coeff, _replace(n.arg, mapping))
    if isinstance(n, Read):
        return Read(n.array, _replace(n.index, mapping))
    if isinstance(n, Lt):
        return Lt(_replace(n.left, mapping), _replace(n.right, mapping))
    if isinstance(n, Eq):
        return Eq(_replace(n.left, mapping), _replace(n.right, mapping))
    if isinstance(n, Cong):
        return Cong(n.modulus, _replace(n.left, mapping), _replace(n.right, mapping))
    if isinstance(n, And):
        return And(tuple(_replace(a, mapping) for a in n.args))
    if isinstance(n, Not):
        return Not(_replace(n.arg, mapping))
    if isinstance(n, (Card, Exists)):
        inner = {k: v for k, v in mapping.items() if n.var not in free_vars(k)}
        if not inner:
            return n
        var, body = n.var, n.body
        if any(var in free_vars(v) for v in inner.values()):
            avoid = all_names(body)
            for k, v in inner.items():
                avoid |= all_names(k) | all_names(v)
            new = fresh_name(var, avoid)
            body = _subst(body, {var: Var(new)})
            var = new
        return type(n)(var, _replace(body, inner))
    raise TypeError(f"not a formula or term: {n!r}")


def rename_symbols(phi, names: Mapping[str, str], arrays: Optional[Mapping[str, str]] = None):
    """Rename free variables/parameters (keeping their kind) and arrays.

    New names must not clash with binders of phi.
    """
    arrays = arrays or {}

    def go(n, bound: frozenset):
        if isinstance(n, Var):
            return Var(names.get(n.name, n.name)) if n.name not in bound else n
        if isinstance(n, Param):
            return Param(names.get(n.name, n.name))
        if isinstance(n, Num):
            return n
        if isinstance(n, Sum):
            return Sum(tuple(go(a, bound) for a in n.args))
        if isinstance(n, Neg):
            return Neg(go(n.arg, bound))
        if isinstance(n, Mul):
            return Mul(n.coeff, go(n.arg, bound))
        if isinstance(n, Read):
            return Read(arrays.get(n.array, n.array), go(n.index, bound))
        if isinstance(n, Lt):
            return Lt(go(n.left, bound), go(n.right, bound))
        if isinstance(n, Eq):
            return Eq(go(n.left, bound), go(n.right, bound))
        if isinstance(n, Cong):
            return Cong(n.modulus, go(n.left, bound), go(n.right, bound))
        if isinstance(n, And):
            return And(tuple(go(a, bound) for a in n.args))
        if isinstance(n, Not):
            return Not(go(n.arg, bound))
        if isinstance(n, (Card, Exists)):
            return type(n)(n.var, go(n.body, bound | {n.var}))
        raise TypeError(f"not a formula or term: {n!r}")

    return go(phi, frozenset())
