"""Recognition of the formula classes the decision procedures accept."""

from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

from .formula import (
    And, Card, Eq, Exists, Param, Read, Var, children, contains, free_vars,
)


class FormulaClass(Enum):
    ARITHMETIC = 'Arithmetic'
    CONSTRAINT = 'Constraint'
    BASIC = 'Basic'
    SIMPLE_FLAT = 'SimpleFlat'
    FLAT = 'Flat'
    SIMPLE_EFLAT = 'SimpleEFlat'
    EFLAT = 'EFlat'
    GENERAL = 'General'

    def __str__(self) -> str:
        return self.value


# containment: each class -> the classes it is contained in (reflexive)
_ABOVE = {
    FormulaClass.ARITHMETIC: {'Arithmetic', 'Constraint', 'Basic', 'SimpleFlat', 'Flat',
                              'SimpleEFlat', 'EFlat', 'General'},
    FormulaClass.BASIC: {'Basic', 'SimpleFlat', 'Flat', 'SimpleEFlat', 'EFlat', 'General'},
    FormulaClass.SIMPLE_FLAT: {'SimpleFlat', 'Flat', 'SimpleEFlat', 'EFlat', 'General'},
    FormulaClass.FLAT: {'Flat', 'EFlat', 'General'},
    FormulaClass.CONSTRAINT: {'Constraint', 'General'},
    FormulaClass.SIMPLE_EFLAT: {'SimpleEFlat', 'EFlat', 'General'},
    FormulaClass.EFLAT: {'EFlat', 'General'},
    FormulaClass.GENERAL: {'General'},
}


def within(cls: FormulaClass, *targets: FormulaClass) -> bool:
    """True if every formula of class `cls` belongs to one of `targets`."""
    return any(t.value in _ABOVE[cls] for t in targets)


def _index_ok(index, exists_bound: frozenset) -> bool:
    if isinstance(index, Param):
        return True
    if isinstance(index, Var):
        return index.name not in exists_bound
    return False


def _flat_check(node, binders: frozenset, exists_bound: frozenset) -> Tuple[bool, bool]:
    """(flat, simple) for `node` given the enclosing binders."""
    flat, simple = True, True
    stack = [(node, binders, exists_bound)]
    while stack:
        n, bs, eb = stack.pop()
        if isinstance(n, Card):
            if free_vars(n) & bs:
                return False, False
            if not _only_under_reads(n.body, n.var):
                simple = False
            stack.append((n.body, bs | {n.var}, frozenset()))
        elif isinstance(n, Exists):
            stack.append((n.body, bs | {n.var}, eb | {n.var}))
        elif isinstance(n, Read):
            if isinstance(n.index, Card):
                stack.append((n.index, bs, eb))
            elif not _index_ok(n.index, eb):
                return False, False
        else:
            stack.extend((c, bs, eb) for c in children(n))
    return flat, simple


def _only_under_reads(body, x: str) -> bool:
    """x occurs in body only as a whole array index."""
    stack = [body]
    while stack:
        n = stack.pop()
        if isinstance(n, Read) and n.index == Var(x):
            continue
        if isinstance(n, Var) and n.name == x:
            return False
        if isinstance(n, (Card, Exists)) and n.var == x:
            continue
        stack.extend(children(n))
    return True


def basic_ok(f) -> bool:
    """No counting terms and every read indexed by a free variable or a parameter."""
    if contains(f, Card):
        return False
    ok, _ = _flat_check(f, frozenset(), frozenset())
    return ok


class EFlatShape(NamedTuple):
    exists: Tuple[str, ...]
    matrix: Tuple
    cards: Tuple[Tuple[str, object, str], ...]   # (bound var, body, result)
    simple: bool


def eflat_shape(phi) -> Optional[EFlatShape]:
    """Recognize  ∃z̲. α ∧ ⋀ ♯{x | β_l} = z_l  with α and the β_l basic."""
    zs: List[str] = []
    body = phi
    while isinstance(body, Exists):
        zs.append(body.var)
        body = body.body
    conjuncts = body.args if isinstance(body, And) else (body,)
    matrix, cards = [], []
    simple = True
    for c in conjuncts:
        if isinstance(c, Eq) and isinstance(c.left, Card) and isinstance(c.right, Var):
            card, res = c.left, c.right.name
        elif isinstance(c, Eq) and isinstance(c.right, Card) and isinstance(c.left, Var):
            card, res = c.right, c.left.name
        else:
            if not basic_ok(c):
                return None
            matrix.append(c)
            continue
        if not basic_ok(card.body):
            return None
        if not _only_under_reads(card.body, card.var):
            simple = False
        cards.append((card.var, card.body, res))
    if not cards:
        return None
    return EFlatShape(tuple(zs), tuple(matrix), tuple(cards), simple)


def classify(phi) -> FormulaClass:
    """Most specific class of phi; counting without arrays is Constraint."""
    has_read = contains(phi, Read)
    has_card = contains(phi, Card)
    if not has_read and not has_card:
        return FormulaClass.ARITHMETIC
    if not has_read:
        return FormulaClass.CONSTRAINT
    return shape_class(phi)


def shape_class(phi) -> FormulaClass:
    """Class within the flat and E-flat families, which also hold array-free counting formulas."""
    has_read = contains(phi, Read)
    has_card = contains(phi, Card)
    if not has_read and not has_card:
        return FormulaClass.ARITHMETIC
    flat, simple = _flat_check(phi, frozenset(), frozenset())
    if flat:
        if not has_card:
            return FormulaClass.BASIC
        return FormulaClass.SIMPLE_FLAT if simple else FormulaClass.FLAT
    if not has_read:
        return FormulaClass.CONSTRAINT
    shape = eflat_shape(phi)
    if shape is not None:
        return FormulaClass.SIMPLE_EFLAT if shape.simple else FormulaClass.EFLAT
    return FormulaClass.GENERAL
