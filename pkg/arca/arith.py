"""
Linear arithmetic over the integers.

Terms are brought into linear form over opaque atoms (variables, parameters,
and any array read or counting term, which are never looked into). Atoms
are normalized to one of

    p < 0        p = 0        p ≡ 0 (mod m)

and quantifier elimination works on negation normal form trees of such
atoms: an equality on the eliminated variable is substituted away when one
is available, otherwise Cooper's method is applied.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache, reduce
from math import gcd
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

from .formula import (
    And, Card, Cong, Eq, Exists, FALSE, Lt, Mul, Neg, Not, Num, Param, Read, Sum, TRUE, Var,
    conj, contains, disj, free_vars, plus, times,
)
from .parser import to_text

logger = logging.getLogger(__name__)


def lcm(*values: int) -> int:
    return reduce(lambda a, b: a * b // gcd(a, b), values, 1)


def _key(term) -> str:
    return to_text(term)


@dataclass(frozen=True)
class Linear:
    """Σ c_i·t_i + const with the t_i opaque terms, sorted and without zero coefficients."""
    coeffs: Tuple[Tuple[object, int], ...]
    const: int

    @staticmethod
    def build(mapping: Dict, const: int) -> 'Linear':
        items = [(t, c) for t, c in mapping.items() if c != 0]
        items.sort(key=lambda tc: _key(tc[0]))
        return Linear(tuple(items), const)

    @staticmethod
    def constant(k: int) -> 'Linear':
        return Linear((), k)

    @staticmethod
    def of(term) -> 'Linear':
        return Linear.build({term: 1}, 0)

    def as_dict(self) -> Dict:
        return dict(self.coeffs)

    def coeff(self, term) -> int:
        for t, c in self.coeffs:
            if t == term:
                return c
        return 0

    def without(self, term) -> 'Linear':
        return Linear(tuple((t, c) for t, c in self.coeffs if t != term), self.const)

    def is_constant(self) -> bool:
        return not self.coeffs

    def terms(self) -> Tuple:
        return tuple(t for t, _ in self.coeffs)

    def __add__(self, other: 'Linear') -> 'Linear':
        d = self.as_dict()
        for t, c in other.coeffs:
            d[t] = d.get(t, 0) + c
        return Linear.build(d, self.const + other.const)

    def __sub__(self, other: 'Linear') -> 'Linear':
        return self + other.scale(-1)

    def __neg__(self) -> 'Linear':
        return self.scale(-1)

    def shift(self, k: int) -> 'Linear':
        return Linear(self.coeffs, self.const + k)

    def scale(self, k: int) -> 'Linear':
        if k == 0:
            return Linear.constant(0)
        return Linear(tuple((t, c * k) for t, c in self.coeffs), self.const * k)

    def substitute(self, term, value: 'Linear') -> 'Linear':
        c = self.coeff(term)
        if c == 0:
            return self
        return self.without(term) + value.scale(c)

    def content(self) -> int:
        return reduce(gcd, (abs(c) for _, c in self.coeffs), 0)

    def to_term(self):
        parts = [times(c, t) for t, c in self.coeffs]
        if self.const:
            parts.append(Num(self.const))
        return plus(*parts)

    def split(self) -> Tuple[object, object]:
        """(P, Q) with self = P − Q and both sides free of negative coefficients."""
        pos = [times(c, t) for t, c in self.coeffs if c > 0]
        negs = [times(-c, t) for t, c in self.coeffs if c < 0]
        if self.const > 0:
            pos.append(Num(self.const))
        elif self.const < 0:
            negs.append(Num(-self.const))
        return plus(*pos), plus(*negs)


def linearize(term) -> Linear:
    if isinstance(term, Num):
        return Linear.constant(term.value)
    if isinstance(term, (Var, Param, Read, Card)):
        return Linear.of(term)
    if isinstance(term, Sum):
        acc = Linear.constant(0)
        for a in term.args:
            acc = acc + linearize(a)
        return acc
    if isinstance(term, Neg):
        return linearize(term.arg).scale(-1)
    if isinstance(term, Mul):
        return linearize(term.arg).scale(term.coeff)
    raise TypeError(f"not a term: {term!r}")


# -- atoms -------------------------------------------------------------------

LT, EQ, CONG = 'lt', 'eq', 'cong'


@dataclass(frozen=True)
class LinAtom:
    """lin < 0, lin = 0, or lin ≡ 0 (mod modulus)."""
    kind: str
    lin: Linear
    modulus: int = 0

    def coeff(self, term) -> int:
        return self.lin.coeff(term)

    def to_formula(self):
        p, q = self.lin.split()
        if self.kind == LT:
            return Lt(p, q)
        if self.kind == EQ:
            return Eq(p, q)
        return Cong(self.modulus, p, q)

    def substitute(self, term, value: Linear) -> Union['LinAtom', bool]:
        return make_atom(self.kind, self.lin.substitute(term, value), self.modulus)


def make_atom(kind: str, lin: Linear, modulus: int = 0) -> Union[LinAtom, bool]:
    """Normalized atom, or its truth value when it is ground."""
    if kind == CONG:
        if modulus == 1:
            return True
        lin = Linear.build({t: c % modulus for t, c in lin.coeffs}, lin.const % modulus)
        if lin.is_constant():
            return lin.const == 0
        return LinAtom(CONG, lin, modulus)
    if lin.is_constant():
        return lin.const < 0 if kind == LT else lin.const == 0
    g = lin.content()
    if kind == LT:
        if g > 1:
            # Σ a_i t_i ≤ −k−1  ⟺  Σ (a_i/g) t_i ≤ ⌊(−k−1)/g⌋
            bound = (-lin.const - 1) // g
            lin = Linear(tuple((t, c // g) for t, c in lin.coeffs), -bound - 1)
        return LinAtom(LT, lin)
    if lin.const % g:
        return False
    lin = Linear(tuple((t, c // g) for t, c in lin.coeffs), lin.const // g)
    if lin.coeffs[0][1] < 0:
        lin = lin.scale(-1)
    return LinAtom(EQ, lin)


def atom_of(f) -> Union[LinAtom, bool]:
    if isinstance(f, Lt):
        return make_atom(LT, linearize(f.left) - linearize(f.right))
    if isinstance(f, Eq):
        return make_atom(EQ, linearize(f.left) - linearize(f.right))
    if isinstance(f, Cong):
        return make_atom(CONG, linearize(f.left) - linearize(f.right), f.modulus)
    raise TypeError(f"not an atom: {f!r}")


def negated_atom(a: LinAtom) -> 'Tree':
    """Positive replacement for ¬a; alternatives of a disjunction are pairwise exclusive."""
    if a.kind == LT:
        return atom_tree(make_atom(LT, (-a.lin).shift(-1)))
    if a.kind == EQ:
        return mk_disj([atom_tree(make_atom(LT, a.lin)), atom_tree(make_atom(LT, -a.lin))])
    return mk_disj([atom_tree(make_atom(CONG, a.lin.shift(-l), a.modulus)) for l in range(1, a.modulus)])


# -- negation normal form trees ----------------------------------------------

@dataclass(frozen=True)
class Conj:
    items: Tuple['Tree', ...]


@dataclass(frozen=True)
class Disj:
    items: Tuple['Tree', ...]


Tree = Union[Conj, Disj, LinAtom]
T_TRUE = Conj(())
T_FALSE = Disj(())


def atom_tree(a: Union[LinAtom, bool]) -> Tree:
    if a is True:
        return T_TRUE
    if a is False:
        return T_FALSE
    return a


def mk_conj(items: Iterable[Tree]) -> Tree:
    out: List[Tree] = []
    for t in items:
        parts = t.items if isinstance(t, Conj) else (t,)
        for p in parts:
            if p == T_FALSE:
                return T_FALSE
            if p not in out:
                out.append(p)
    if len(out) == 1:
        return out[0]
    return Conj(tuple(out))


def mk_disj(items: Iterable[Tree]) -> Tree:
    out: List[Tree] = []
    for t in items:
        parts = t.items if isinstance(t, Disj) else (t,)
        for p in parts:
            if p == T_TRUE:
                return T_TRUE
            if p not in out:
                out.append(p)
    if len(out) == 1:
        return out[0]
    return Disj(tuple(out))


def to_tree(f, positive: bool = True) -> Tree:
    """Negation normal form of a quantifier-free formula."""
    if isinstance(f, (Lt, Eq, Cong)):
        a = atom_of(f)
        if isinstance(a, bool):
            return atom_tree(a if positive else not a)
        return a if positive else negated_atom(a)
    if isinstance(f, And):
        kids = [to_tree(a, positive) for a in f.args]
        return mk_conj(kids) if positive else mk_disj(kids)
    if isinstance(f, Not):
        return to_tree(f.arg, not positive)
    if isinstance(f, Exists):
        raise ValueError("to_tree expects a quantifier-free formula")
    raise TypeError(f"not a formula: {f!r}")


def from_tree(t: Tree):
    if isinstance(t, LinAtom):
        return t.to_formula()
    if isinstance(t, Conj):
        return conj(*(from_tree(i) for i in t.items)) if t.items else TRUE
    return disj(*(from_tree(i) for i in t.items)) if t.items else FALSE


def map_atoms(t: Tree, fn: Callable[[LinAtom], Tree]) -> Tree:
    if isinstance(t, LinAtom):
        return fn(t)
    if isinstance(t, Conj):
        return mk_conj(map_atoms(i, fn) for i in t.items)
    return mk_disj(map_atoms(i, fn) for i in t.items)


def tree_atoms(t: Tree) -> List[LinAtom]:
    out: List[LinAtom] = []
    stack = [t]
    while stack:
        n = stack.pop()
        if isinstance(n, LinAtom):
            if n not in out:
                out.append(n)
        else:
            stack.extend(reversed(n.items))
    return out


def mentions(t: Tree, term) -> bool:
    return any(a.coeff(term) != 0 for a in tree_atoms(t))


# -- ground evaluation -------------------------------------------------------

def ground_truth(f) -> Optional[bool]:
    """Truth value of f when it is decided by its ground atoms alone, else None."""
    if isinstance(f, (Lt, Eq, Cong)):
        a = atom_of(f)
        return a if isinstance(a, bool) else None
    if isinstance(f, And):
        unknown = False
        for a in f.args:
            v = ground_truth(a)
            if v is False:
                return False
            if v is None:
                unknown = True
        return None if unknown else True
    if isinstance(f, Not):
        v = ground_truth(f.arg)
        return None if v is None else not v
    if isinstance(f, Exists):
        return ground_truth(f.body)
    raise TypeError(f"not a formula: {f!r}")


def simplify(f):
    """Fold ground atoms and normalize the remaining ones (quantifier-free input)."""
    return from_tree(to_tree(f))


# -- quantifier elimination --------------------------------------------------

def eliminate_quantifiers(f):
    """Equivalent quantifier-free formula. Counting terms are treated as opaque."""
    if not contains(f, Exists):
        return f
    return from_tree(quantifier_free_tree(f))


@lru_cache(maxsize=1024)
def quantifier_free_tree(f) -> Tree:
    """Negation normal form of f with every quantifier eliminated."""
    return _qe_tree(f, True)


def negate_tree(t: Tree) -> Tree:
    if isinstance(t, LinAtom):
        return negated_atom(t)
    if isinstance(t, Conj):
        return mk_disj(negate_tree(i) for i in t.items)
    return mk_conj(negate_tree(i) for i in t.items)


def _qe_tree(f, positive: bool) -> Tree:
    if isinstance(f, (Lt, Eq, Cong)):
        return to_tree(f, positive)
    if isinstance(f, And):
        kids = [_qe_tree(a, positive) for a in f.args]
        return mk_conj(kids) if positive else mk_disj(kids)
    if isinstance(f, Not):
        return _qe_tree(f.arg, not positive)
    if isinstance(f, Exists):
        body = _qe_tree(f.body, True)
        result = exists_tree(Var(f.var), body)
        return result if positive else negate_tree(result)
    raise TypeError(f"not a formula: {f!r}")


def exists_tree(x, t: Tree) -> Tree:
    """Quantifier-free tree equivalent to ∃x t."""
    for a in tree_atoms(t):
        for term in a.lin.terms():
            if term != x and contains(term, Var) and _mentions_var(term, x):
                raise ValueError(f"cannot eliminate {x.name}: it occurs inside {_key(term)}")
    if not mentions(t, x):
        return t
    if isinstance(t, Disj):
        return mk_disj(exists_tree(x, i) for i in t.items)
    if isinstance(t, Conj):
        eqs = [i for i in t.items if isinstance(i, LinAtom) and i.kind == EQ and i.coeff(x) != 0]
        if eqs:
            eq = min(eqs, key=lambda a: abs(a.coeff(x)))
            return _solve_equality(x, eq, t)
    return _cooper(x, t)


def _mentions_var(term, x) -> bool:
    return x.name in free_vars(term)


def scaled_substitution(x, c: int, p: Linear, t: Tree) -> Tree:
    """t with x := −p/c, assuming c divides p; every atom mentioning x is scaled by |c|."""
    k = abs(c)
    sign = 1 if c > 0 else -1

    def sub(a: LinAtom) -> Tree:
        ax = a.coeff(x)
        if ax == 0:
            return a
        q = a.lin.without(x)
        lin = q.scale(k) + p.scale(-ax * sign)
        return atom_tree(make_atom(a.kind, lin, a.modulus * k if a.kind == CONG else 0))

    return map_atoms(t, sub)


def _solve_equality(x, eq: LinAtom, t: Tree) -> Tree:
    c = eq.coeff(x)
    p = eq.lin.without(x)
    body = scaled_substitution(x, c, p, t)
    if abs(c) > 1:
        body = mk_conj([atom_tree(make_atom(CONG, p, abs(c))), body])
    return body


def _cooper(x, t: Tree) -> Tree:
    atoms = [a for a in tree_atoms(t) if a.coeff(x) != 0]
    delta = lcm(*(abs(a.coeff(x)) for a in atoms))

    def unit(a: LinAtom) -> Tree:
        ax = a.coeff(x)
        if ax == 0:
            return a
        s = delta // abs(ax)
        lin = a.lin.without(x).scale(s) + Linear.of(x).scale(1 if ax > 0 else -1)
        return atom_tree(make_atom(a.kind, lin, a.modulus * s if a.kind == CONG else 0))

    t = map_atoms(t, unit)
    if delta > 1:
        t = mk_conj([t, atom_tree(make_atom(CONG, Linear.of(x), delta))])

    lowers: List[Linear] = []   # x > b
    uppers: List[Linear] = []   # x < a
    moduli = [1]
    for a in tree_atoms(t):
        ax = a.coeff(x)
        if ax == 0:
            continue
        rest = a.lin.without(x)
        if a.kind == LT:
            if ax < 0:
                lowers.append(rest)            # −x + q < 0  ⟺  x > q
            else:
                uppers.append(-rest)           # x + q < 0  ⟺  x < −q
        elif a.kind == EQ:
            value = -rest if ax > 0 else rest  # x = value
            lowers.append(value.shift(-1))
            uppers.append(value.shift(1))
        else:
            moduli.append(a.modulus)
    d = lcm(*moduli)

    use_lower = len(lowers) <= len(uppers)

    def at_infinity(a: LinAtom) -> Tree:
        ax = a.coeff(x)
        if ax == 0 or a.kind == CONG:
            return a
        if a.kind == EQ:
            return T_FALSE
        is_upper = ax > 0
        # −∞ satisfies every upper bound and no lower bound; +∞ the reverse
        return T_TRUE if is_upper == use_lower else T_FALSE

    def at(value: Linear) -> Tree:
        return map_atoms(t, lambda a: atom_tree(a.substitute(x, value)))

    limit = map_atoms(t, at_infinity)
    disjuncts: List[Tree] = []
    for j in range(1, d + 1):
        point = Linear.constant(j if use_lower else -j)
        disjuncts.append(map_atoms(limit, lambda a: atom_tree(a.substitute(x, point))))
    for bound in (lowers if use_lower else uppers):
        for j in range(1, d + 1):
            disjuncts.append(at(bound.shift(j if use_lower else -j)))
    result = mk_disj(disjuncts)
    logger.debug(f"cooper on {x.name}: delta={delta} d={d} bounds={len(lowers if use_lower else uppers)}")
    return result
