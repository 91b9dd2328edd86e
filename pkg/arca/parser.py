"""
Surface syntax (.arca) reader and printer.

The reader is a two-stage affair: a tokenizer producing positioned
s-expressions, then a recursive walk that resolves symbols against the
declarations, desugars derived connectives and alpha-renames binders.
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple, Union

from .errors import ArcaSyntaxError, SymbolError
from .formula import (
    And, Card, Cong, Eq, Exists, FALSE, Lt, Mul, Neg, Not, Num, Param, Read, Sum, TRUE, Var,
    fresh_name, free_symbols,
)

logger = logging.getLogger(__name__)

_INT = re.compile(r'^-?\d+$')

RESERVED = frozenset({
    'and', 'or', 'not', '=>', 'iff', 'exists', 'forall', '<', '<=', '>', '>=', '=', 'distinct',
    'mod-eq', '+', '-', '*', 'select', 'card', 'true', 'false', 'assert', 'declare-param',
    'declare-var', 'declare-array',
})


# -- s-expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class SList:
    items: Tuple[Union['SList', Atom], ...]
    line: int
    column: int


SExpr = Union[SList, Atom]


def read_sexprs(text: str) -> List[SExpr]:
    """Read every top-level s-expression of `text`."""
    stack: List[Tuple[list, int, int]] = []
    top: List[SExpr] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == '\n':
            line, col = line + 1, 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ';':
            while i < n and text[i] != '\n':
                i += 1
            continue
        if ch == '(':
            stack.append(([], line, col))
            i += 1
            col += 1
            continue
        if ch == ')':
            if not stack:
                raise ArcaSyntaxError("unbalanced ')'", line, col)
            items, l0, c0 = stack.pop()
            node = SList(tuple(items), l0, c0)
            (stack[-1][0] if stack else top).append(node)
            i += 1
            col += 1
            continue
        start, c0 = i, col
        while i < n and not text[i].isspace() and text[i] not in '();':
            i += 1
            col += 1
        node = Atom(text[start:i], line, c0)
        (stack[-1][0] if stack else top).append(node)
    if stack:
        _, l0, c0 = stack[-1]
        raise ArcaSyntaxError("unclosed '('", l0, c0)
    return top


def _err(message: str, at: SExpr) -> ArcaSyntaxError:
    return ArcaSyntaxError(message, at.line, at.column)


def _int_literal(expr: SExpr, what: str) -> int:
    if isinstance(expr, Atom) and _INT.match(expr.text):
        return int(expr.text)
    raise _err(f"non-constant {what}", expr)


# -- symbols -----------------------------------------------------------------

@dataclass(frozen=True)
class SymbolTable:
    params: FrozenSet[str] = frozenset({'N'})
    arrays: FrozenSet[str] = frozenset()
    vars: FrozenSet[str] = frozenset()

    def __post_init__(self):
        if 'N' not in self.params:
            object.__setattr__(self, 'params', self.params | {'N'})
        if (self.params & self.arrays) or (self.params & self.vars) or (self.arrays & self.vars):
            raise SymbolError("parameter, array and variable names must be pairwise distinct")

    def kinds(self) -> Dict[str, str]:
        k = {p: 'param' for p in self.params}
        k.update({a: 'array' for a in self.arrays})
        k.update({v: 'var' for v in self.vars})
        return k

    @classmethod
    def of(cls, *formulas) -> 'SymbolTable':
        vs, ps, arrs = set(), {'N'}, set()
        for f in formulas:
            s = free_symbols(f)
            vs |= s.vars
            ps |= s.params
            arrs |= s.arrays
        return cls(frozenset(ps), frozenset(arrs), frozenset(vs))

    def union(self, other: 'SymbolTable') -> 'SymbolTable':
        return SymbolTable(self.params | other.params, self.arrays | other.arrays, self.vars | other.vars)


def check_symbol(name: str, at: Optional[SExpr] = None, allow_bang: bool = False) -> None:
    problem = None
    if name in RESERVED:
        problem = f"'{name}' is reserved"
    elif _INT.match(name) or not name or name[0].isdigit():
        problem = f"'{name}' is not a symbol"
    elif '!' in name and not allow_bang:
        problem = f"'{name}': '!' is reserved for generated names"
    if problem:
        if at is not None:
            raise SymbolError(f"{problem} (line {at.line}, column {at.column})")
        raise SymbolError(problem)


# -- formulas ----------------------------------------------------------------

class FormulaReader:
    """Turns s-expressions into AST nodes against a fixed set of declared names."""

    def __init__(self, kinds: Mapping[str, str]):
        self.kinds = dict(kinds)
        self._binders: Set[str] = set()

    def formula(self, expr: SExpr):
        self._binders = set()
        return self._formula(expr, {})

    def term(self, expr: SExpr):
        self._binders = set()
        return self._term(expr, {})

    def _bind(self, name_expr: SExpr, scope: Dict[str, str]) -> Tuple[str, Dict[str, str]]:
        if not isinstance(name_expr, Atom):
            raise _err("expected a variable name", name_expr)
        name = name_expr.text
        check_symbol(name, name_expr, allow_bang=True)
        if name in self.kinds or name in self._binders or name in scope:
            new = fresh_name(name, set(self.kinds) | self._binders | set(scope.values()))
        else:
            new = name
        self._binders.add(new)
        inner = dict(scope)
        inner[name] = new
        return new, inner

    def _binder_list(self, expr: SExpr) -> List[SExpr]:
        if not isinstance(expr, SList) or not expr.items:
            raise _err("expected a non-empty variable list", expr)
        return list(expr.items)

    def _term(self, expr: SExpr, scope: Dict[str, str]):
        if isinstance(expr, Atom):
            text = expr.text
            if _INT.match(text):
                return Num(int(text))
            if text in scope:
                return Var(scope[text])
            kind = self.kinds.get(text)
            if kind == 'var':
                return Var(text)
            if kind == 'param':
                return Param(text)
            if kind == 'array':
                raise _err(f"array '{text}' used as a term", expr)
            raise SymbolError(f"undeclared symbol '{text}' (line {expr.line}, column {expr.column})")
        if not expr.items or not isinstance(expr.items[0], Atom):
            raise _err("expected a term", expr)
        head, args = expr.items[0].text, expr.items[1:]
        if head == '+':
            if len(args) < 2:
                raise _err("'+' takes at least two arguments", expr)
            return Sum(tuple(self._term(a, scope) for a in args))
        if head == '-':
            if len(args) == 1:
                return Neg(self._term(args[0], scope))
            if len(args) == 2:
                return Sum((self._term(args[0], scope), Neg(self._term(args[1], scope))))
            raise _err("'-' takes one or two arguments", expr)
        if head == '*':
            if len(args) != 2:
                raise _err("'*' takes a constant and a term", expr)
            return Mul(_int_literal(args[0], 'coefficient'), self._term(args[1], scope))
        if head == 'select':
            if len(args) != 2 or not isinstance(args[0], Atom):
                raise _err("'select' takes an array and an index", expr)
            name = args[0].text
            if self.kinds.get(name) != 'array':
                raise SymbolError(f"undeclared array '{name}' (line {args[0].line}, column {args[0].column})")
            return Read(name, self._term(args[1], scope))
        if head == 'card':
            if len(args) != 2:
                raise _err("'card' takes a variable and a formula", expr)
            var, inner = self._bind(args[0], scope)
            return Card(var, self._formula(args[1], inner))
        raise _err(f"unknown term operator '{head}'", expr)

    def _formula(self, expr: SExpr, scope: Dict[str, str]):
        if isinstance(expr, Atom):
            if expr.text == 'true':
                return TRUE
            if expr.text == 'false':
                return FALSE
            raise _err(f"expected a formula, got '{expr.text}'", expr)
        if not expr.items or not isinstance(expr.items[0], Atom):
            raise _err("expected a formula", expr)
        head, args = expr.items[0].text, expr.items[1:]
        f = lambda e: self._formula(e, scope)
        t = lambda e: self._term(e, scope)

        def arity(k: int):
            if len(args) != k:
                raise _err(f"'{head}' takes {k} arguments", expr)

        if head == 'and':
            return And(tuple(f(a) for a in args))
        if head == 'or':
            if not args:
                raise _err("'or' needs at least one argument", expr)
            return Not(And(tuple(Not(f(a)) for a in args)))
        if head == 'not':
            arity(1)
            return Not(f(args[0]))
        if head == '=>':
            arity(2)
            return Not(And((f(args[0]), Not(f(args[1])))))
        if head == 'iff':
            arity(2)
            a, b = f(args[0]), f(args[1])
            return And((Not(And((a, Not(b)))), Not(And((b, Not(a))))))
        if head in ('exists', 'forall'):
            arity(2)
            names = self._binder_list(args[0])
            bound, inner = [], scope
            for name_expr in names:
                v, inner = self._bind(name_expr, inner)
                bound.append(v)
            body = self._formula(args[1], inner)
            for v in reversed(bound):
                body = Exists(v, body) if head == 'exists' else Not(Exists(v, Not(body)))
            return body
        if head == '<':
            arity(2)
            return Lt(t(args[0]), t(args[1]))
        if head == '<=':
            arity(2)
            return Not(Lt(t(args[1]), t(args[0])))
        if head == '>':
            arity(2)
            return Lt(t(args[1]), t(args[0]))
        if head == '>=':
            arity(2)
            return Not(Lt(t(args[0]), t(args[1])))
        if head == '=':
            arity(2)
            return Eq(t(args[0]), t(args[1]))
        if head == 'distinct':
            arity(2)
            return Not(Eq(t(args[0]), t(args[1])))
        if head == 'mod-eq':
            arity(3)
            modulus = _int_literal(args[0], 'modulus')
            if modulus < 1:
                raise _err("modulus must be >= 1", args[0])
            return Cong(modulus, t(args[1]), t(args[2]))
        raise _err(f"unknown formula operator '{head}'", expr)


def parse(text: str) -> Tuple[SymbolTable, List]:
    """Parse a .arca script into its declarations and asserted formulas."""
    kinds: Dict[str, str] = {'N': 'param'}
    pending: List[SExpr] = []
    for form in read_sexprs(text):
        if not isinstance(form, SList) or not form.items or not isinstance(form.items[0], Atom):
            raise _err("expected a declaration or assertion", form)
        head = form.items[0].text
        if head in ('declare-param', 'declare-var', 'declare-array'):
            if len(form.items) != 2 or not isinstance(form.items[1], Atom):
                raise _err(f"'{head}' takes one symbol", form)
            name_atom = form.items[1]
            name = name_atom.text
            check_symbol(name, name_atom)
            if name in kinds:
                what = "is implicitly declared" if name == 'N' else "is already declared"
                raise SymbolError(f"'{name}' {what} (line {name_atom.line}, column {name_atom.column})")
            kinds[name] = head.split('-', 1)[1]
        elif head == 'assert':
            if len(form.items) != 2:
                raise _err("'assert' takes one formula", form)
            pending.append(form.items[1])
        else:
            raise _err(f"unknown command '{head}'", form)
    reader = FormulaReader(kinds)
    formulas = [reader.formula(e) for e in pending]
    table = SymbolTable(
        params=frozenset(k for k, v in kinds.items() if v == 'param'),
        arrays=frozenset(k for k, v in kinds.items() if v == 'array'),
        vars=frozenset(k for k, v in kinds.items() if v == 'var'),
    )
    logger.debug(f"parsed {len(formulas)} assertion(s) over {len(kinds)} symbol(s)")
    return table, formulas


# -- printing ----------------------------------------------------------------

def to_text(node) -> str:
    """Canonical surface syntax of a term or formula."""
    out: List[str] = []
    _emit(node, out)
    return ''.join(out)


def _emit(n, out: List[str]) -> None:
    if isinstance(n, Num):
        out.append(str(n.value))
    elif isinstance(n, (Var, Param)):
        out.append(n.name)
    elif isinstance(n, Sum):
        if len(n.args) == 2 and isinstance(n.args[1], Neg):
            _app(out, '-', n.args[0], n.args[1].arg)
        else:
            _app(out, '+', *n.args)
    elif isinstance(n, Neg):
        _app(out, '-', n.arg)
    elif isinstance(n, Mul):
        out.append(f"(* {n.coeff} ")
        _emit(n.arg, out)
        out.append(')')
    elif isinstance(n, Read):
        out.append(f"(select {n.array} ")
        _emit(n.index, out)
        out.append(')')
    elif isinstance(n, Card):
        out.append(f"(card {n.var} ")
        _emit(n.body, out)
        out.append(')')
    elif isinstance(n, Lt):
        _app(out, '<', n.left, n.right)
    elif isinstance(n, Eq):
        _app(out, '=', n.left, n.right)
    elif isinstance(n, Cong):
        _app(out, f"mod-eq {n.modulus}", n.left, n.right)
    elif isinstance(n, And):
        if not n.args:
            out.append('true')
        else:
            _app(out, 'and', *n.args)
    elif isinstance(n, Exists):
        out.append(f"(exists ({n.var}) ")
        _emit(n.body, out)
        out.append(')')
    elif isinstance(n, Not):
        a = n.arg
        if a == TRUE:
            out.append('false')
        elif isinstance(a, Exists) and isinstance(a.body, Not):
            out.append(f"(forall ({a.var}) ")
            _emit(a.body.arg, out)
            out.append(')')
        elif isinstance(a, Lt):
            _app(out, '<=', a.right, a.left)
        elif isinstance(a, Eq):
            _app(out, 'distinct', a.left, a.right)
        elif isinstance(a, And) and len(a.args) >= 2 and all(isinstance(b, Not) for b in a.args):
            _app(out, 'or', *(b.arg for b in a.args))
        else:
            _app(out, 'not', a)
    else:
        raise TypeError(f"cannot print {n!r}")


def _app(out: List[str], head: str, *args) -> None:
    out.append('(')
    out.append(head)
    for a in args:
        out.append(' ')
        _emit(a, out)
    out.append(')')


def script_text(formulas: Iterable, symbols: Optional[SymbolTable] = None,
                comments: Iterable[str] = ()) -> str:
    """A complete .arca script declaring every symbol the formulas use."""
    formulas = list(formulas)
    table = SymbolTable.of(*formulas)
    if symbols is not None:
        table = table.union(symbols)
    lines = [f"; {c}" for c in comments]
    lines += [f"(declare-param {p})" for p in sorted(table.params) if p != 'N']
    lines += [f"(declare-var {v})" for v in sorted(table.vars)]
    lines += [f"(declare-array {a})" for a in sorted(table.arrays)]
    lines += [f"(assert {to_text(f)})" for f in formulas]
    return '\n'.join(lines) + '\n'
