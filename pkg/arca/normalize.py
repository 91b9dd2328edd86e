"""
Normal forms consumed by the decision procedures.

An E-flat form is  ∃z̲. α ∧ ⋀_l ♯{x | β_l} = z_l  with α and the β_l basic;
all bodies here share one counting variable (`EFlatForm.index`). The
general procedure removes reads at scalars and turns the bodies into a
partition; the simple procedure guesses positions and values of those reads
and ends with reduced forms whose bodies see arrays only at the counting
variable.
"""

import logging
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from .arith import ground_truth
from .classify import FormulaClass, _only_under_reads, eflat_shape, shape_class
from .errors import FormulaClassError
from .formula import (
    N, ONE, TRUE, ZERO, And, Card, Eq, Exists, Lt, NameSupply, Not, Num, Read, Var,
    all_names, base_name, children, conj, contains, disj, exists, ge, le, ne, neg, plus,
    replace_terms, substitute, walk,
)
from .parser import SymbolTable, to_text

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CardEquation:
    """♯{index | body} = result."""
    body: object
    result: str


@dataclass(frozen=True)
class EFlatForm:
    matrix: Tuple = ()
    cards: Tuple[CardEquation, ...] = ()
    index: str = 'x'
    exists: Tuple[str, ...] = ()
    symbols: SymbolTable = field(default_factory=SymbolTable)
    guesses: Tuple[str, ...] = ()

    @property
    def alpha(self):
        return conj(*self.matrix) if self.matrix else TRUE

    @property
    def k(self) -> int:
        return len(self.cards)

    def card_atoms(self) -> List:
        return [Eq(Card(self.index, c.body), Var(c.result)) for c in self.cards]

    def matrix_formula(self):
        """α ∧ ⋀ ♯{x | β_l} = z_l with z̲ free."""
        return conj(self.alpha, *self.card_atoms())

    def formula(self):
        """The existential closure over z̲."""
        return exists(self.exists, self.matrix_formula())

    def names(self) -> set:
        out = set(self.exists) | {self.index} | set(self.symbols.kinds())
        out |= all_names(self.matrix_formula())
        return out

    def describe(self) -> List[str]:
        lines = [f"guess: {g}" for g in self.guesses]
        lines.append(f"exists: {' '.join(self.exists) or '-'}")
        return lines


@dataclass(frozen=True)
class DependencyGraph:
    """Arc z_j -> z_i when z_i occurs in the body of z_j."""
    nodes: Tuple[str, ...]
    arcs: frozenset

    @classmethod
    def of(cls, e: EFlatForm) -> 'DependencyGraph':
        nodes = tuple(c.result for c in e.cards)
        arcs = set()
        for c in e.cards:
            used = {n.name for n in walk(c.body) if isinstance(n, Var)}
            for z in nodes:
                if z in used:
                    arcs.add((c.result, z))
        return cls(nodes, frozenset(arcs))

    def successors(self, node: str) -> List[str]:
        return sorted(b for a, b in self.arcs if a == node)

    def is_acyclic(self) -> bool:
        state: Dict[str, int] = {}

        def visit(n: str) -> bool:
            state[n] = 1
            for m in self.successors(n):
                if state.get(m) == 1:
                    return False
                if m not in state and not visit(m):
                    return False
            state[n] = 2
            return True

        return all(visit(n) for n in self.nodes if n not in state)


# -- flat -> E-flat ----------------------------------------------------------

def _conjuncts(f) -> Tuple:
    if isinstance(f, And):
        return f.args
    return (f,)


class _Abstraction:
    def __init__(self, supply: NameSupply, index: str):
        self.supply = supply
        self.index = index
        self.bodies: Dict[object, str] = {}
        self.cards: List[CardEquation] = []

    def card(self, c: Card) -> Var:
        body = substitute(self.term_or_formula(c.body), c.var, Var(self.index))
        z = self.bodies.get(body)
        if z is None:
            z = self.supply.fresh('z')
            self.bodies[body] = z
            self.cards.append(CardEquation(body, z))
        return Var(z)

    def term_or_formula(self, n):
        cards = [c for c in _outermost(n, Card)]
        if not cards:
            return n
        return replace_terms(n, {c: self.card(c) for c in cards})


def _outermost(node, kind) -> Iterator:
    stack = [node]
    seen = set()
    while stack:
        n = stack.pop()
        if isinstance(n, kind):
            if n not in seen:
                seen.add(n)
                yield n
            continue
        stack.extend(reversed(children(n)))


def flatten(phi, supply: Optional[NameSupply] = None) -> EFlatForm:
    """E-flat form of a flat formula: each counting term is abstracted by a fresh z."""
    cls = shape_class(phi)
    if cls not in (FormulaClass.ARITHMETIC, FormulaClass.BASIC, FormulaClass.SIMPLE_FLAT, FormulaClass.FLAT):
        raise FormulaClassError(f"flatten expects a flat formula, got {cls}")
    supply = supply or NameSupply(all_names(phi))
    abstraction = _Abstraction(supply, supply.fresh('x'))
    matrix = abstraction.term_or_formula(phi)
    form = EFlatForm(
        matrix=_conjuncts(matrix) if matrix != TRUE else (),
        cards=tuple(abstraction.cards),
        index=abstraction.index,
        exists=tuple(c.result for c in abstraction.cards),
        symbols=SymbolTable.of(phi),
    )
    logger.debug(f"flatten: {form.k} counting term(s) abstracted")
    return form


def read_eflat(phi, supply: Optional[NameSupply] = None) -> EFlatForm:
    """EFlatForm of a formula already in E-flat shape (dependencies may be cyclic)."""
    shape = eflat_shape(phi)
    if shape is None:
        raise FormulaClassError("formula is not in E-flat shape")
    supply = supply or NameSupply(all_names(phi))
    index = supply.fresh('x')
    cards = []
    matrix = list(shape.matrix)
    bound = list(shape.exists)
    seen: Dict[object, str] = {}
    for var, body, result in shape.cards:
        body = substitute(body, var, Var(index))
        if body in seen:
            matrix.append(Eq(Var(result), Var(seen[body])))
            continue
        if result in {c.result for c in cards}:
            # the same result counted twice: keep both counts and equate them
            w = supply.fresh(result)
            matrix.append(Eq(Var(result), Var(w)))
            bound.append(w)
            result = w
        seen[body] = result
        cards.append(CardEquation(body, result))
    return EFlatForm(tuple(matrix), tuple(cards), index, tuple(bound), SymbolTable.of(phi))


def to_eflat(phi, supply: Optional[NameSupply] = None) -> EFlatForm:
    """flatten for flat input, read_eflat for E-flat input."""
    cls = shape_class(phi)
    if cls in (FormulaClass.SIMPLE_EFLAT, FormulaClass.EFLAT):
        return read_eflat(phi, supply)
    return flatten(phi, supply)


# -- reads at scalars --------------------------------------------------------

def scalar_reads(e: EFlatForm) -> List[Read]:
    """Array reads whose index is not the counting variable, in a fixed order."""
    found = {}
    for f in list(e.matrix) + [c.body for c in e.cards]:
        for n in walk(f):
            if isinstance(n, Read) and n.index != Var(e.index):
                found[n] = None
    return sorted(found, key=to_text)


def _index_terms(reads: Sequence[Read]) -> List:
    terms = {}
    for r in reads:
        terms[r.index] = None
    return sorted(terms, key=to_text)


def _outside(v):
    return disj(Lt(v, ZERO), le(N, v))


def _inside(v):
    return conj(le(ZERO, v), Lt(v, N))


def _rewrite(e: EFlatForm, mapping: Dict) -> Tuple[Tuple, Tuple[CardEquation, ...]]:
    matrix = tuple(replace_terms(f, mapping) for f in e.matrix)
    cards = tuple(CardEquation(replace_terms(c.body, mapping), c.result) for c in e.cards)
    return matrix, cards


def _viable(matrix: Sequence) -> bool:
    return all(ground_truth(f) is not False for f in matrix)


def eliminate_parameter_reads(e: EFlatForm, supply: Optional[NameSupply] = None) -> List[EFlatForm]:
    """Disjuncts without reads at scalars; each inside read becomes a one-element count."""
    reads = scalar_reads(e)
    if not reads:
        return [e]
    supply = supply or NameSupply(e.names())
    terms = _index_terms(reads)
    out: List[EFlatForm] = []
    for choice in product((False, True), repeat=len(terms)):
        mapping: Dict = {}
        extra_matrix: List = []
        extra_cards: List[CardEquation] = []
        extra_exists: List[str] = []
        guesses: List[str] = []
        for v, inside in zip(terms, choice):
            at_v = [r for r in reads if r.index == v]
            if not inside:
                extra_matrix.append(_outside(v))
                guesses.append(f"{to_text(v)} outside [0,N)")
                mapping.update({r: ZERO for r in at_v})
                continue
            extra_matrix.append(_inside(v))
            guesses.append(f"{to_text(v)} inside [0,N)")
            for r in at_v:
                u = supply.fresh('u')
                z = supply.fresh('z')
                mapping[r] = Var(u)
                body = conj(Eq(Var(e.index), v), Eq(Read(r.array, Var(e.index)), Var(u)))
                extra_cards.append(CardEquation(body, z))
                extra_matrix.append(Eq(Var(z), ONE))
                extra_exists += [u, z]
        matrix, cards = _rewrite(e, mapping)
        matrix = matrix + tuple(extra_matrix)
        if not _viable(matrix):
            logger.debug(f"pruned guess {guesses}")
            continue
        out.append(replace(e, matrix=matrix, cards=cards + tuple(extra_cards),
                           exists=e.exists + tuple(extra_exists), guesses=e.guesses + tuple(guesses)))
    return out


def make_partition(e: EFlatForm, supply: Optional[NameSupply] = None) -> EFlatForm:
    """Replace the K bodies by the 2^K bodies ⋀_l ±β_l (σ ordered as binary numbers, β_1 first)."""
    k = e.k
    if k == 0:
        return e
    supply = supply or NameSupply(e.names())
    bodies = [c.body for c in e.cards]
    regions: List[CardEquation] = []
    members: Dict[int, List[str]] = {l: [] for l in range(k)}
    for mask in range(2 ** k):
        bits = [(mask >> (k - 1 - l)) & 1 for l in range(k)]
        body = conj(*(b if bit else neg(b) for b, bit in zip(bodies, bits)))
        u = supply.fresh('u')
        regions.append(CardEquation(body, u))
        for l, bit in enumerate(bits):
            if bit:
                members[l].append(u)
    sums = tuple(Eq(Var(c.result), plus(*(Var(u) for u in members[l])))
                 for l, c in enumerate(e.cards))
    return replace(e, matrix=e.matrix + sums, cards=tuple(regions),
                   exists=e.exists + tuple(r.result for r in regions))


# -- simple preprocessing ----------------------------------------------------

def set_partitions(items: Sequence) -> Iterator[List[List]]:
    """All partitions of `items` as restricted growth strings, in lexicographic order."""
    n = len(items)
    if n == 0:
        yield []
        return

    def grow(i: int, labels: List[int], top: int) -> Iterator[List[int]]:
        if i == n:
            yield labels
            return
        for b in range(top + 2):
            yield from grow(i + 1, labels + [b], max(top, b))

    for labels in grow(1, [0], 0):
        blocks: List[List] = [[] for _ in range(max(labels) + 1)]
        for item, b in zip(items, labels):
            blocks[b].append(item)
        yield blocks


class ValueClass(NamedTuple):
    """Index positions whose array tuple equals `values`; `count` is its cardinality result."""
    count: str
    size: int
    values: Tuple[Tuple[str, str], ...]     # (array, witness variable)
    members: Tuple[object, ...]             # index terms placed in this class, one per position


@dataclass(frozen=True)
class ReducedForm:
    """An E-flat form without scalar reads plus how the guessed reads are placed."""
    form: EFlatForm
    classes: Tuple[ValueClass, ...] = ()
    aliases: Tuple[Tuple[object, object], ...] = ()   # (index term, representative)
    outside: Tuple[object, ...] = ()

    @property
    def alpha(self):
        return self.form.alpha

    def formula(self):
        return self.form.formula()


def is_simple(e: EFlatForm) -> bool:
    return all(_only_under_reads(c.body, e.index) for c in e.cards)


def simple_preprocess(e: EFlatForm, supply: Optional[NameSupply] = None) -> List[ReducedForm]:
    """Disjuncts whose bodies read arrays only at the counting variable."""
    if not is_simple(e):
        raise FormulaClassError("simple preprocessing needs bodies that use the counting variable only as an index")
    reads = scalar_reads(e)
    if not reads:
        return [ReducedForm(e)]
    supply = supply or NameSupply(e.names())
    terms = _index_terms(reads)
    arrays = sorted({r.array for r in reads})
    out: List[ReducedForm] = []
    for choice in product((False, True), repeat=len(terms)):
        outside = [v for v, inside in zip(terms, choice) if not inside]
        inside = [v for v, inside in zip(terms, choice) if inside]
        base_matrix = [_outside(v) for v in outside] + [_inside(v) for v in inside]
        base_guess = [f"{to_text(v)} outside [0,N)" for v in outside] + \
                     [f"{to_text(v)} inside [0,N)" for v in inside]
        zero_map = {r: ZERO for r in reads if r.index in outside}
        for blocks in set_partitions(inside):
            reps = [b[0] for b in blocks]
            eq_matrix = [Eq(v, b[0]) for b in blocks for v in b[1:]]
            eq_matrix += [ne(reps[i], reps[j]) for i in range(len(reps)) for j in range(i + 1, len(reps))]
            block_guess = [f"{' = '.join(to_text(v) for v in b)}" for b in blocks if len(b) > 1]
            witnesses = {(a, j): supply.fresh(f"u!{a}") for j in range(len(reps)) for a in arrays}
            for classes in set_partitions(list(range(len(reps)))):
                out.extend(_reduce(e, supply, reads, arrays, blocks, reps, classes, witnesses, zero_map,
                                   base_matrix + eq_matrix, base_guess + block_guess, tuple(outside)))
    logger.debug(f"simple preprocessing: {len(out)} reduced form(s) from {len(terms)} index term(s)")
    return out


def _reduce(e, supply, reads, arrays, blocks, reps, classes, witnesses, zero_map,
            matrix_extra, guesses, outside) -> List[ReducedForm]:
    mapping = dict(zero_map)
    block_of = {v: j for j, b in enumerate(blocks) for v in b}
    class_of = {j: q for q, members in enumerate(classes) for j in members}
    lead = [members[0] for members in classes]
    for r in reads:
        if r.index in block_of:
            j = block_of[r.index]
            mapping[r] = Var(witnesses[(r.array, lead[class_of[j]])])
    matrix = list(matrix_extra)
    for q in range(len(classes)):
        for q2 in range(q + 1, len(classes)):
            matrix.append(disj(*(ne(Var(witnesses[(a, lead[q])]), Var(witnesses[(a, lead[q2])]))
                                 for a in arrays)))
    value_classes = []
    cards = []
    names: List[str] = []
    for q, members in enumerate(classes):
        zp = supply.fresh('zp')
        values = tuple((a, witnesses[(a, lead[q])]) for a in arrays)
        body = conj(*(Eq(Read(a, Var(e.index)), Var(w)) for a, w in values))
        cards.append(CardEquation(body, zp))
        matrix.append(ge(Var(zp), Num(len(members))))
        names += [w for _, w in values] + [zp]
        value_classes.append(ValueClass(zp, len(members), values, tuple(reps[j] for j in members)))
    rewritten, bodies = _rewrite(e, mapping)
    full = rewritten + tuple(matrix)
    if not _viable(full):
        return []
    class_guess = [f"class {{{', '.join(to_text(reps[j]) for j in members)}}}" for members in classes]
    form = replace(e, matrix=full, cards=bodies + tuple(cards), exists=e.exists + tuple(names),
                   guesses=e.guesses + tuple(guesses) + tuple(class_guess))
    aliases = tuple((v, b[0]) for b in blocks for v in b)
    return [ReducedForm(form, tuple(value_classes), aliases, outside)]


# -- top-level cases ---------------------------------------------------------

class Case(NamedTuple):
    conjuncts: Tuple
    skolems: Tuple[str, ...]

    @property
    def formula(self):
        return conj(*self.conjuncts) if self.conjuncts else TRUE


def _pure(f) -> bool:
    return not contains(f, (Read, Card, Exists))


def split_cases(phi, supply: Optional[NameSupply] = None, session=None) -> List[Case]:
    """Conjunctive cases of phi's top-level and/or skeleton, existentials Skolemized.

    Purely arithmetic conjuncts are checked in `session` (when given) as the search goes and
    inconsistent partial cases are dropped.
    """
    supply = supply or NameSupply(all_names(phi))
    cases: List[Case] = []

    def go(pending: List, chosen: List, skolems: List[str]) -> None:
        if not pending:
            cases.append(Case(tuple(chosen), tuple(skolems)))
            return
        f, rest = pending[0], pending[1:]
        if isinstance(f, And):
            go(list(f.args) + rest, chosen, skolems)
            return
        if isinstance(f, Exists):
            name = supply.fresh(base_name(f.var))
            go([substitute(f.body, f.var, Var(name))] + rest, chosen, skolems + [name])
            return
        if isinstance(f, Not) and isinstance(f.arg, Not):
            go([f.arg.arg] + rest, chosen, skolems)
            return
        if isinstance(f, Not) and isinstance(f.arg, And) and f.arg.args:
            for a in f.arg.args:
                go([neg(a)] + rest, chosen, skolems)
            return
        truth = ground_truth(f) if _pure(f) else None
        if truth is False:
            return
        if truth is True:
            go(rest, chosen, skolems)
            return
        if session is not None and _pure(f):
            session.push()
            session.add(f)
            verdict = session.check(values=())
            if verdict.is_unsat:
                session.pop()
                return
            go(rest, chosen + [f], skolems)
            session.pop()
            return
        go(rest, chosen + [f], skolems)

    go([phi], [], [])
    logger.debug(f"{len(cases)} top-level case(s)")
    return cases


def skolemize(phi, supply: NameSupply):
    """Drop existentials in positive positions, renaming their variables apart."""
    def go(f, positive: bool):
        if isinstance(f, Exists) and positive:
            name = supply.fresh(base_name(f.var))
            return go(substitute(f.body, f.var, Var(name)), positive)
        if isinstance(f, And):
            return And(tuple(go(a, positive) for a in f.args))
        if isinstance(f, Not):
            return Not(go(f.arg, not positive))
        return f
    return go(phi, True)
