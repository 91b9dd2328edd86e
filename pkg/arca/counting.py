"""
Elimination of counting terms from constraint formulas.

A counting atom  y = ♯{x | α}  (x ranging over [0, N)) is rewritten into a
Presburger formula in y and the other free symbols of α:

  R1  quantifiers of α are eliminated;
  R2  negations are pushed into the atoms (¬ of an atom is a disjunction of
      pairwise exclusive atoms);
  R4  atoms without x are split off as outer case distinctions;
  R3  the remaining atoms are expanded into pairwise inconsistent cubes, and
      the counts of the cubes add up;
  R5  a cube with an equality kx = t counts 0 or 1;
  R6  coefficients of x are normalized: congruences with non-constant
      right-hand side get a residue guess, inequalities are scaled to x' = L·x;
  R8  congruences on x' are merged into a single one;
  R7  the largest lower bound and the smallest upper bound are guessed, and
      the count of a residue class on an interval is written without division.
"""

import logging
from dataclasses import dataclass
from itertools import product
from math import gcd
from typing import Iterator, List, Optional, Sequence, Tuple

from .arith import (
    CONG, EQ, LT, LinAtom, Linear, T_FALSE, T_TRUE, Tree, atom_tree, from_tree, lcm, linearize, make_atom,
    map_atoms, mk_conj, negate_tree, negated_atom, quantifier_free_tree, scaled_substitution,
    tree_atoms,
)
from .errors import FormulaClassError
from .formula import (
    FALSE, N, ONE, TRUE, ZERO, And, Card, Cong, Eq, Exists, Lt, NameSupply, Not, Read, Var,
    all_names, children, conj, contains, disj, exists, free_vars, neg, plus, replace_terms,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CountAtom:
    """result = ♯{var | body}."""
    result: str
    var: str
    body: object


@dataclass(frozen=True)
class NormalizedConjunct:
    """lowers ≤ x' < uppers with x' ≡ residues, where x' = scale·x."""
    scale: int
    lowers: Tuple[Linear, ...]
    uppers: Tuple[Linear, ...]
    congruences: Tuple[Tuple[int, int], ...]


def normalize_congruence(l: int, n: int, k: int) -> Optional[Tuple[int, int]]:
    """Solve l·x ≡ k (mod n) as x ≡ k' (mod n'); None when there is no solution."""
    if n < 1:
        raise ValueError(f"modulus must be >= 1, got {n}")
    g = gcd(l, n)
    if k % g:
        return None
    n2 = n // g
    if n2 == 1:
        return 1, 0
    inverse = pow((l // g) % n2, -1, n2)
    return n2, (inverse * (k // g)) % n2


def merge_congruences(pairs: Sequence[Tuple[int, int]]) -> Optional[Tuple[int, int]]:
    """Single (modulus, residue) equivalent to all x ≡ residue (mod modulus), or None."""
    m, r = 1, 0
    for n, k in pairs:
        g = gcd(m, n)
        if (k - r) % g:
            return None
        step = n // g
        t = 0
        if step > 1:
            t = ((k - r) // g * pow((m // g) % step, -1, step)) % step
        r = r + m * t
        m = m * step
        r %= m
    return m, r


def _formula(a):
    if a is True:
        return TRUE
    if a is False:
        return FALSE
    return a.to_formula()


def _lin_special_case(t1: Linear, t2: Linear, n: int, t3: Linear, y: Var):
    ylin = Linear.of(y)
    hits, cases = [], []
    for r in range(n):
        z = t1.shift(r)
        hit = conj(_formula(make_atom(CONG, z - t3, n)), _formula(make_atom(LT, z - t2)))
        if hit == FALSE:
            continue
        value = disj(*(_formula(make_atom(EQ, ylin.scale(n) - t2.shift(l) + z)) for l in range(n)))
        hits.append(hit)
        cases.append(conj(hit, value))
    cases.append(conj(*(neg(h) for h in hits), Eq(y, ZERO)))
    return disj(*cases)


def count_special_case(t1, t2, n: int, t3, y: str):
    """y = ♯{x | t1 ≤ x < t2 ∧ x ≡ t3 (mod n)} without division.

    The least solution is t1 + r for the one r ∈ [0, n) with t1 + r ≡ t3, and the count is
    ⌈(t2 − t1 − r)/n⌉ when it lies below t2; the ceiling is the disjunction over the
    possible remainders.
    """
    if n < 1:
        raise ValueError(f"modulus must be >= 1, got {n}")
    return _lin_special_case(linearize(t1), linearize(t2), n, linearize(t3), Var(y))


# -- atoms over x ------------------------------------------------------------

def _complement(a: LinAtom):
    if a.kind == LT:
        c = make_atom(LT, (-a.lin).shift(-1))
        return c if isinstance(c, LinAtom) else None
    return None


def _assign(t: Tree, atom: LinAtom, value: bool) -> Tree:
    comp = _complement(atom)

    def fix(a: LinAtom) -> Tree:
        if a == atom:
            return T_TRUE if value else T_FALSE
        if comp is not None and a == comp:
            return T_FALSE if value else T_TRUE
        return a

    return map_atoms(t, fix)


def _alternatives(a: LinAtom) -> List[LinAtom]:
    """Negation of a as a list of pairwise exclusive atoms."""
    if a.kind == LT:
        raw = [make_atom(LT, (-a.lin).shift(-1))]
    elif a.kind == EQ:
        raw = [make_atom(LT, a.lin), make_atom(LT, -a.lin)]
    else:
        raw = [make_atom(CONG, a.lin.shift(-l), a.modulus) for l in range(1, a.modulus)]
    return [r for r in raw if isinstance(r, LinAtom)]


def venn_cubes(t: Tree, chosen: Tuple[LinAtom, ...] = ()) -> Iterator[Tuple[LinAtom, ...]]:
    """Pairwise inconsistent conjunctions of atoms whose disjunction is t."""
    if t == T_TRUE:
        yield chosen
        return
    if t == T_FALSE:
        return
    atom = tree_atoms(t)[0]
    yield from venn_cubes(_assign(t, atom, True), chosen + (atom,))
    rest = _assign(t, atom, False)
    if rest != T_FALSE:
        for alt in _alternatives(atom):
            yield from venn_cubes(rest, chosen + (alt,))


def _bounds(x: Var) -> List[LinAtom]:
    return [make_atom(LT, Linear.of(x).scale(-1).shift(-1)),   # 0 ≤ x
            make_atom(LT, Linear.of(x) - Linear.of(N))]        # x < N


def normalize_conjunct(x: Var, lts: Sequence[LinAtom],
                       congruences: Sequence[Tuple[int, int]]) -> NormalizedConjunct:
    """Scale x to x' = L·x, L the lcm of the inequality coefficients of x."""
    scale = lcm(*(abs(a.coeff(x)) for a in lts))
    lowers: List[Linear] = []
    uppers: List[Linear] = []
    for a in lts:
        c = a.coeff(x)
        p = a.lin.without(x)
        if c > 0:
            # c·x < −p
            bound = p.scale(-(scale // c))
            if bound not in uppers:
                uppers.append(bound)
        else:
            # p < |c|·x
            bound = p.scale(scale // -c).shift(1)
            if bound not in lowers:
                lowers.append(bound)
    congs = tuple((scale * n, scale * k) for n, k in congruences) + ((scale, 0),)
    return NormalizedConjunct(scale, tuple(lowers), tuple(uppers), congs)


def _guard_extreme(values: Sequence[Linear], i: int, largest: bool):
    """values[i] is the largest (smallest) one, ties going to the lowest index."""
    out = []
    vi = values[i]
    for j, vj in enumerate(values):
        if j == i:
            continue
        diff = (vj - vi) if largest else (vi - vj)
        out.append(_formula(make_atom(LT, diff if j < i else diff.shift(-1))))
    return conj(*out)


def _count_normalized(nc: NormalizedConjunct, y: Var):
    merged = merge_congruences(nc.congruences)
    if merged is None:
        return Eq(y, ZERO)
    modulus, residue = merged
    cases = []
    for i, lo in enumerate(nc.lowers):
        low_guard = _guard_extreme(nc.lowers, i, True)
        if low_guard == FALSE:
            continue
        for k, up in enumerate(nc.uppers):
            up_guard = _guard_extreme(nc.uppers, k, False)
            if up_guard == FALSE:
                continue
            cases.append(conj(low_guard, up_guard,
                              _lin_special_case(lo, up, modulus, Linear.constant(residue), y)))
    return disj(*cases)


def _count_cube(cube: Sequence[LinAtom], x: Var, y: Var):
    atoms = list(cube) + _bounds(x)
    eqs = [a for a in atoms if a.kind == EQ]
    if eqs:
        eq = min(eqs, key=lambda a: abs(a.coeff(x)))
        c = eq.coeff(x)
        p = eq.lin.without(x)
        point = scaled_substitution(x, c, p, mk_conj(atoms))
        if abs(c) > 1:
            point = mk_conj([atom_tree(make_atom(CONG, p, abs(c))), point])
        return disj(conj(Eq(y, ONE), from_tree(point)),
                    conj(Eq(y, ZERO), from_tree(negate_tree(point))))

    lts = [a for a in atoms if a.kind == LT]
    fixed: List[Tuple[int, int]] = []
    guessed: List[Tuple[int, int, Linear]] = []
    for a in atoms:
        if a.kind != CONG:
            continue
        c, m, p = a.coeff(x), a.modulus, a.lin.without(x)
        if p.is_constant():
            solved = normalize_congruence(c, m, (-p.const) % m)
            if solved is None:
                return Eq(y, ZERO)
            fixed.append(solved)
        else:
            guessed.append((c, m, p))

    cases = []
    for residues in product(*(range(m) for _, m, _ in guessed)):
        guard, congs = [], list(fixed)
        for (c, m, p), r in zip(guessed, residues):
            # −p ≡ r (mod m)
            guard.append(_formula(make_atom(CONG, p.shift(r), m)))
            congs.append(normalize_congruence(c, m, r))
        if any(g is None for g in congs):
            body = Eq(y, ZERO)
        else:
            body = _count_normalized(normalize_conjunct(x, lts, congs), y)
        cases.append(conj(*guard, body))
    return disj(*cases)


def _count(t: Tree, x: Var, y: Var, supply: NameSupply):
    independent = [a for a in tree_atoms(t) if a.coeff(x) == 0]
    if independent:
        atom = independent[0]
        return disj(conj(atom.to_formula(), _count(_assign(t, atom, True), x, y, supply)),
                    conj(from_tree(negated_atom(atom)), _count(_assign(t, atom, False), x, y, supply)))
    cubes = list(venn_cubes(t))
    if not cubes:
        return Eq(y, ZERO)
    if len(cubes) == 1:
        return _count_cube(cubes[0], x, y)
    names = [supply.fresh(y.name.split('!', 1)[0]) for _ in cubes]
    parts = [_count_cube(c, x, Var(n)) for c, n in zip(cubes, names)]
    logger.debug(f"{len(cubes)} regions for {y.name} = #{{{x.name} | ...}}")
    return exists(names, conj(*parts, Eq(y, plus(*(Var(n) for n in names)))))


def eliminate_count_atom(atom: CountAtom, supply: Optional[NameSupply] = None):
    """Arithmetic formula equivalent to result = ♯{var | 0 ≤ var < N ∧ body}."""
    if contains(atom.body, (Card, Read)):
        raise FormulaClassError("counting body must be arithmetic")
    if atom.result in free_vars(atom.body):
        raise ValueError(f"result variable {atom.result} occurs in the counted body")
    if supply is None:
        supply = NameSupply(all_names(atom.body) | {atom.result, atom.var})
    tree = quantifier_free_tree(atom.body)
    return _count(tree, Var(atom.var), Var(atom.result), supply)


# -- whole formulas ----------------------------------------------------------

def _outer_cards(node) -> List[Card]:
    found: List[Card] = []
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Card):
            if n not in found:
                found.append(n)
            continue
        stack.extend(reversed(children(n)))
    return found


def _direct(f) -> Optional[Tuple[str, Card]]:
    if isinstance(f, Eq):
        for card, other in ((f.left, f.right), (f.right, f.left)):
            if isinstance(card, Card) and isinstance(other, Var) and other.name not in free_vars(card):
                return other.name, card
    return None


def _eliminate(f, supply: NameSupply):
    if isinstance(f, (Lt, Eq, Cong)):
        cards = _outer_cards(f)
        if not cards:
            return f
        direct = _direct(f)
        if direct is not None:
            result, card = direct
            return eliminate_count_atom(CountAtom(result, card.var, _eliminate(card.body, supply)), supply)
        names, parts, mapping = [], [], {}
        for card in cards:
            z = supply.fresh('z')
            names.append(z)
            mapping[card] = Var(z)
            body = _eliminate(card.body, supply)
            parts.append(eliminate_count_atom(CountAtom(z, card.var, body), supply))
        return exists(names, conj(*parts, replace_terms(f, mapping)))
    if isinstance(f, And):
        return And(tuple(_eliminate(a, supply) for a in f.args))
    if isinstance(f, Not):
        return Not(_eliminate(f.arg, supply))
    if isinstance(f, Exists):
        return Exists(f.var, _eliminate(f.body, supply))
    raise TypeError(f"not a formula: {f!r}")


def eliminate_counting(phi, supply: Optional[NameSupply] = None):
    """Equivalent arithmetic formula for a constraint formula (no array reads)."""
    if contains(phi, Read):
        raise FormulaClassError("eliminate_counting expects a formula without array reads")
    if supply is None:
        supply = NameSupply(all_names(phi))
    result = _eliminate(phi, supply)
    logger.debug(f"counting eliminated: {len(_outer_cards(phi))} outer counting terms")
    return result
