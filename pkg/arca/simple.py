"""
Decision procedure for simple formulas.

A reduced form ∃z̲. α ∧ ⋀ ♯{x | β_l} = z_l whose bodies read arrays only at
the counting variable is decided by guessing which combinations of body
atoms (assignments σ) occur at all, then solving a linear system over the
multiplicities of the guessed combinations. At most `max_support(K)`
combinations need positive multiplicity, so a guarded system over every
consistent combination is equisatisfiable with the original form.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .arith import eliminate_quantifiers, ground_truth
from .backend import SolverConfig, SolverStatus, SolverVerdict, constants_of, decide, open_session
from .classify import FormulaClass, shape_class, within
from .config import Config
from .errors import CertificateError, FormulaClassError, ResourceLimitError, SolverFailure
from .formula import (
    FALSE, N, ONE, TRUE, ZERO, And, Card, Eq, Exists, Lt, NameSupply, Not, Num, Read, Var,
    all_names, conj, contains, free_symbols, implies, le, neg, plus, replace_terms, substitute_many, walk,
)
from .normalize import Case, ReducedForm, simple_preprocess, split_cases, to_eflat
from .parser import to_text
from .semantics import FiniteModel, eval_finite, eval_term
from .verdict import Verdict

logger = logging.getLogger(__name__)


class Mode(Enum):
    GUARDED = 'guarded'
    STRICT = 'strict'

    def __str__(self) -> str:
        return self.value


def max_support(k: int) -> int:
    """Bound on the number of assignments with positive multiplicity for K cardinality constraints."""
    if k < 1:
        raise ValueError(f"support bound needs at least one cardinality constraint, got {k}")
    return math.ceil(2 * k * math.log2(4 * k))


# -- bounded universals ------------------------------------------------------

class Rewrite(NamedTuple):
    formula: object
    pinned: Tuple[Card, ...]


def _flat_conjuncts(f):
    if isinstance(f, And):
        for a in f.args:
            yield from _flat_conjuncts(a)
    else:
        yield f


def _is_lower_guard(f, x: str) -> bool:
    if f == Not(Lt(Var(x), ZERO)):
        return True
    return isinstance(f, Lt) and f.left == Num(-1) and f.right == Var(x)


def _is_upper_guard(f, x: str) -> bool:
    return f == Lt(Var(x), N)


def bounded_universal(f) -> Optional[Tuple[str, object]]:
    """(x, β) when f reads ∀x (0 ≤ x ∧ x < N → β), else None."""
    if not (isinstance(f, Not) and isinstance(f.arg, Exists)):
        return None
    x, g = f.arg.var, f.arg.body
    while isinstance(g, Not) and isinstance(g.arg, Not):
        g = g.arg.arg
    if not isinstance(g, And):
        return None
    parts = list(_flat_conjuncts(g))
    lower = next((i for i, p in enumerate(parts) if _is_lower_guard(p, x)), None)
    upper = next((i for i, p in enumerate(parts) if _is_upper_guard(p, x)), None)
    if lower is None or upper is None:
        return None
    rest = [p for i, p in enumerate(parts) if i not in (lower, upper)]
    beta = neg(conj(*rest))
    truth = ground_truth(beta)
    if truth is not None:
        beta = TRUE if truth else FALSE
    return x, beta


def rewrite_bounded_universal(phi) -> Rewrite:
    """Replace every ∀x (0 ≤ x < N → β) by N = ♯{x | β}; the new counting terms are returned as pinned."""
    pinned: List[Card] = []

    def go(f):
        match = bounded_universal(f)
        if match is not None:
            x, beta = match
            card = Card(x, go(beta))
            pinned.append(card)
            return Eq(N, card)
        if isinstance(f, And):
            return And(tuple(go(a) for a in f.args))
        if isinstance(f, Not):
            return Not(go(f.arg))
        if isinstance(f, Exists):
            return Exists(f.var, go(f.body))
        return f

    out = go(phi)
    if pinned:
        logger.debug(f"rewrote {len(pinned)} bounded universal(s)")
    return Rewrite(out, tuple(pinned))


# -- atom basis and assignments ----------------------------------------------

def _is_pinned(matrix: Sequence, result: str) -> bool:
    z = Var(result)
    return Eq(N, z) in matrix or Eq(z, N) in matrix


@dataclass(frozen=True)
class AtomBasis:
    atoms: Tuple
    pinned: int
    witnesses: Tuple[Tuple[str, str], ...]      # (array, generic witness variable)

    def __len__(self) -> int:
        return len(self.atoms)

    def provenance(self, i: int) -> str:
        return 'universal-betas' if i < self.pinned else 'bodies'


@dataclass(frozen=True)
class SigmaAssignment:
    values: Tuple[int, ...]

    def literals(self, basis: AtomBasis):
        return conj(*(a if v else neg(a) for a, v in zip(basis.atoms, self.values)))

    def __str__(self) -> str:
        return ''.join(map(str, self.values))


@dataclass(frozen=True)
class SimpleProblem:
    """α, card results and generic bodies (reads at the counting variable replaced by witnesses)."""
    alpha: object
    results: Tuple[str, ...]
    bodies: Tuple
    basis: AtomBasis
    supply: NameSupply

    @property
    def k(self) -> int:
        return len(self.results)

    @classmethod
    def from_reduced(cls, r: ReducedForm) -> 'SimpleProblem':
        e = r.form
        supply = NameSupply(e.names())
        arrays = sorted({n.array for c in e.cards for n in _reads(c.body)})
        generic = tuple((a, supply.fresh(f"w!{a}")) for a in arrays)
        mapping = {Read(a, Var(e.index)): Var(w) for a, w in generic}
        bodies = tuple(replace_terms(c.body, mapping) for c in e.cards)
        pinned = [l for l, c in enumerate(e.cards) if _is_pinned(e.matrix, c.result)]
        atoms: List = []
        for l in pinned:
            if bodies[l] not in atoms:
                atoms.append(bodies[l])
        n_pinned = len(atoms)
        for l, body in enumerate(bodies):
            if l in pinned:
                continue
            # bodies over N or parameters are atoms too
            if body not in atoms and ground_truth(body) is None:
                atoms.append(body)
        basis = AtomBasis(tuple(atoms), n_pinned, generic)
        return cls(e.alpha, tuple(c.result for c in e.cards), bodies, basis, supply)

    def truth(self, sigma: SigmaAssignment) -> Tuple[int, ...]:
        """⟦β_l⟧ under σ for every body."""
        known = dict(zip(self.basis.atoms, sigma.values))
        out = []
        for body in self.bodies:
            out.append(known[body] if body in known else int(bool(ground_truth(body))))
        return tuple(out)


def _reads(body):
    return (n for n in walk(body) if isinstance(n, Read))


def _require(verdict: SolverVerdict) -> None:
    if verdict.status in (SolverStatus.UNKNOWN, SolverStatus.PROCESS_ERROR):
        raise SolverFailure(verdict.detail or str(verdict.status))


def enumerate_assignments(basis: AtomBasis, alpha, session, max_sigma: Optional[int] = None
                          ) -> List[SigmaAssignment]:
    """Every assignment of the basis consistent with α, pinned atoms fixed to true.

    Raises ResourceLimitError past `max_sigma` assignments; the session is left as it was.
    """
    max_sigma = max_sigma or Config.MAX_SIGMA
    session.push()
    session.add(alpha)
    verdict = session.check(values=())
    _require(verdict)
    out: List[SigmaAssignment] = []
    if verdict.is_unsat:
        session.pop()
        return out

    def dfs(i: int, chosen: List[int]) -> None:
        if i == len(basis.atoms):
            out.append(SigmaAssignment(tuple(chosen)))
            if len(out) > max_sigma:
                raise ResourceLimitError(f"more than {max_sigma} atom assignments")
            return
        atom = basis.atoms[i]
        for value in ((1,) if i < basis.pinned else (1, 0)):
            session.push()
            try:
                session.add(atom if value else neg(atom))
                v = session.check(values=())
                _require(v)
                if v.is_sat:
                    dfs(i + 1, chosen + [value])
            finally:
                session.pop()

    try:
        dfs(0, [])
    finally:
        session.pop()
    logger.info(f"{len(out)} consistent assignment(s) over {len(basis.atoms)} atom(s)")
    return out


# -- the linear system -------------------------------------------------------

@dataclass(frozen=True)
class SigmaSystem:
    formula: object
    sigmas: Tuple[SigmaAssignment, ...]
    multiplicities: Tuple[str, ...]
    witnesses: Tuple[Tuple[Tuple[str, str], ...], ...]    # per σ: (array, witness)
    indicators: Tuple[str, ...]
    incidence: np.ndarray
    mode: Mode

    @property
    def internal(self) -> frozenset:
        names = set(self.multiplicities) | set(self.indicators)
        names |= {w for block in self.witnesses for _, w in block}
        return frozenset(names)

    def assignment(self, j: int, values: Mapping[str, int]) -> SigmaAssignment:
        return self.sigmas[j]


def build_sigma_system(problem: SimpleProblem, sigmas: Sequence[SigmaAssignment],
                       mode: Mode = Mode.GUARDED, support: Optional[int] = None) -> SigmaSystem:
    """α ∧ per-σ witness blocks ∧ z_l = Σ v_σ[⟦β_l⟧σ] ∧ Σ v_σ = N."""
    supply = problem.supply
    basis = problem.basis
    parts = [problem.alpha]
    mults, indicators, witnesses = [], [], []
    for s in sigmas:
        v = supply.fresh('v')
        mults.append(v)
        block_names = tuple((a, supply.fresh(f"w!{a}")) for a, _ in basis.witnesses)
        witnesses.append(block_names)
        mapping = {generic: Var(w) for (_, generic), (_, w) in zip(basis.witnesses, block_names)}
        block = substitute_many(s.literals(basis), mapping)
        if mode is Mode.STRICT:
            parts += [Lt(ZERO, Var(v)), block]
        else:
            b = supply.fresh('b')
            indicators.append(b)
            parts += [le(ZERO, Var(v)), implies(Lt(ZERO, Var(v)), block),
                      le(ZERO, Var(b)), le(Var(b), ONE), implies(Eq(Var(b), ZERO), Eq(Var(v), ZERO))]
    if mode is Mode.GUARDED and support is not None and indicators:
        parts.append(le(plus(*(Var(b) for b in indicators)), Num(support)))
    incidence = np.array([problem.truth(s) for s in sigmas], dtype=np.int64).reshape(
        len(sigmas), problem.k).T
    for l, z in enumerate(problem.results):
        parts.append(Eq(Var(z), plus(*(Var(mults[i]) for i in np.flatnonzero(incidence[l])))))
    parts.append(Eq(plus(*(Var(v) for v in mults)), N))
    return SigmaSystem(conj(*parts), tuple(sigmas), tuple(mults), tuple(witnesses),
                       tuple(indicators), incidence, mode)


@dataclass(frozen=True)
class SlotSystem:
    """A fixed number of assignment slots whose atom values the solver chooses.

    Used when the consistent assignments are too many to list: a solution needs
    at most max_support(K) of them, so that many slots lose nothing.
    """
    formula: object
    multiplicities: Tuple[str, ...]
    witnesses: Tuple[Tuple[Tuple[str, str], ...], ...]
    truths: Tuple[Tuple[Optional[str], ...], ...]      # per slot and atom: 0/1 variable, None if pinned
    counters: Tuple[str, ...]

    @property
    def internal(self) -> frozenset:
        names = set(self.multiplicities) | set(self.counters)
        names |= {w for block in self.witnesses for _, w in block}
        names |= {t for row in self.truths for t in row if t is not None}
        return frozenset(names)

    def assignment(self, j: int, values: Mapping[str, int]) -> SigmaAssignment:
        return SigmaAssignment(tuple(1 if t is None else int(values.get(t, 0) > 0) for t in self.truths[j]))


def build_slot_system(problem: SimpleProblem, slots: int) -> SlotSystem:
    supply = problem.supply
    basis = problem.basis
    index = {a: i for i, a in enumerate(basis.atoms)}
    parts = [problem.alpha]
    mults, witnesses, truths, counters = [], [], [], []
    counted: List[List] = [[] for _ in problem.results]
    for _ in range(slots):
        v = supply.fresh('v')
        mults.append(v)
        block_names = tuple((a, supply.fresh(f"w!{a}")) for a, _ in basis.witnesses)
        witnesses.append(block_names)
        mapping = {generic: Var(w) for (_, generic), (_, w) in zip(basis.witnesses, block_names)}
        row, literals = [], []
        for i, atom in enumerate(basis.atoms):
            here = substitute_many(atom, mapping)
            if i < basis.pinned:
                row.append(None)
                literals.append(here)
                continue
            t = supply.fresh('t')
            row.append(t)
            parts += [le(ZERO, Var(t)), le(Var(t), ONE)]
            literals += [implies(Eq(Var(t), ONE), here), implies(Eq(Var(t), ZERO), neg(here))]
        truths.append(tuple(row))
        parts += [le(ZERO, Var(v)), implies(Lt(ZERO, Var(v)), conj(*literals))]
        for l, body in enumerate(problem.bodies):
            if body in index and row[index[body]] is not None:
                t, c = row[index[body]], supply.fresh('c')
                counters.append(c)
                parts += [implies(Eq(Var(t), ONE), Eq(Var(c), Var(v))),
                          implies(Eq(Var(t), ZERO), Eq(Var(c), ZERO))]
                counted[l].append(Var(c))
            elif body in index or ground_truth(body):
                counted[l].append(Var(v))
    for z, terms in zip(problem.results, counted):
        parts.append(Eq(Var(z), plus(*terms)))
    parts.append(Eq(plus(*(Var(v) for v in mults)), N))
    return SlotSystem(conj(*parts), tuple(mults), tuple(witnesses), tuple(truths), tuple(counters))


# -- certificates ------------------------------------------------------------

@dataclass(frozen=True)
class SatCertificate:
    basis: Tuple
    sigmas: Tuple[SigmaAssignment, ...]
    multiplicities: Tuple[int, ...]
    witnesses: Tuple[Mapping[str, int], ...]    # per σ: array -> value at its positions
    values: Mapping[str, int]
    cards: int = 0                              # K, the number of counting constraints

    @property
    def support(self) -> int:
        return len(self.sigmas)

    def to_json(self) -> dict:
        return {
            'values': dict(sorted(self.values.items())),
            'cards': self.cards,
            'basis': [to_text(a) for a in self.basis],
            'sigma': [{'assignment': str(s), 'multiplicity': m, 'witness': dict(sorted(w.items()))}
                      for s, m, w in zip(self.sigmas, self.multiplicities, self.witnesses)],
        }


def certificate_of(system, problem: SimpleProblem, values: Mapping[str, int]) -> SatCertificate:
    """Certificate of a solved SigmaSystem or SlotSystem; zero multiplicities are dropped."""
    sigmas, mults, wits = [], [], []
    for j, (v, block) in enumerate(zip(system.multiplicities, system.witnesses)):
        m = values.get(v, 0)
        if m <= 0:
            continue
        sigmas.append(system.assignment(j, values))
        mults.append(m)
        wits.append({a: values.get(w, 0) for a, w in block})
    kept = {k: v for k, v in values.items() if k not in system.internal}
    return SatCertificate(problem.basis.atoms, tuple(sigmas), tuple(mults), tuple(wits), kept, problem.k)


def _model(values: Mapping[str, int], symbols, arrays: Optional[Mapping] = None) -> FiniteModel:
    n = values.get('N', 0)
    params = {p: values.get(p, 0) for p in symbols.params if p != 'N'}
    scalars = {k: v for k, v in values.items() if k != 'N' and k not in params}
    if arrays is None:
        arrays = {a: (0,) * max(n, 0) for a in symbols.arrays}
    return FiniteModel(n, params, scalars, arrays)


def holds(f, values: Mapping[str, int]) -> bool:
    """Truth of a read-free formula under integer values; quantifiers are eliminated, not enumerated."""
    s = free_symbols(f)
    ground = substitute_many(f, {name: Num(values.get(name, 0)) for name in s.vars | s.params})
    truth = ground_truth(eliminate_quantifiers(ground))
    if truth is None:
        raise CertificateError(f"cannot evaluate {to_text(f)[:80]} on scalar values")
    return truth


# widest explicit quantifier range used when checking a materialized model
_EXPLICIT_BOUND = 4096


def check_model(f, model: FiniteModel, values: Mapping[str, int]) -> Optional[bool]:
    """eval_finite over a quantifier range covering the values; None when that range would be too wide."""
    if not contains(f, Exists):
        return eval_finite(f, model)
    bound = max([abs(v) for v in values.values()] + [model.n]) + 1
    if bound > _EXPLICIT_BOUND:
        logger.debug(f"explicit check skipped: quantifier range of {bound}")
        return None
    return eval_finite(f, model, bound=bound)


def verify_certificate(r: ReducedForm, c: SatCertificate, materialize_limit: Optional[int] = None) -> bool:
    """Check c against r on scalars alone; with a limit, also build the finite model when N is small enough."""
    problem = SimpleProblem.from_reduced(r)
    if tuple(problem.basis.atoms) != tuple(c.basis):
        raise CertificateError("certificate basis does not match the reduced form")
    if not (len(c.sigmas) == len(c.multiplicities) == len(c.witnesses)):
        raise CertificateError("certificate sigma, multiplicity and witness lists differ in length")
    if any(len(s.values) != len(c.basis) for s in c.sigmas):
        raise CertificateError("assignment length does not match the basis")
    if 'N' not in c.values:
        raise CertificateError("certificate has no value for N")
    n = c.values['N']
    if any(m <= 0 for m in c.multiplicities) or sum(c.multiplicities) != n:
        logger.warning(f"multiplicities {c.multiplicities} do not sum to N = {n}")
        return False
    if not holds(problem.alpha, c.values):
        logger.warning("certificate values violate the arithmetic part")
        return False
    rows = []
    for s, w in zip(c.sigmas, c.witnesses):
        env = dict(c.values)
        env.update({generic: w.get(a, 0) for a, generic in problem.basis.witnesses})
        actual = tuple(int(holds(a, env)) for a in c.basis)
        if actual != s.values:
            logger.warning(f"witness {w} does not realize assignment {s}")
            return False
        rows.append(problem.truth(s))
    # object dtype keeps multiplicities exact past 64 bits
    incidence = np.array(rows, dtype=object).reshape(len(rows), problem.k)
    counts = np.dot(np.array(c.multiplicities, dtype=object), incidence) if rows else [0] * problem.k
    for z, count in zip(problem.results, counts):
        if c.values.get(z) != int(count):
            logger.warning(f"{z} = {c.values.get(z)} but the assignments count {int(count)}")
            return False
    if materialize_limit is not None and n <= materialize_limit:
        materialized_model(r, c)
    return True


def materialize(r: ReducedForm, c: SatCertificate) -> FiniteModel:
    """Lay the assignments out in order, then permute so each guessed read lands on its position."""
    n = c.values['N']
    arrays = sorted(r.form.symbols.arrays)
    layout: Dict[str, List[int]] = {a: [] for a in arrays}
    for m, w in zip(c.multiplicities, c.witnesses):
        for _ in range(m):
            for a in arrays:
                layout[a].append(w.get(a, 0))
    targets: Dict[int, int] = {}
    for cls in r.classes:
        wanted = {a: c.values.get(w, 0) for a, w in cls.values}
        candidates = [p for p in range(n) if all(layout[a][p] == v for a, v in wanted.items())]
        for rep in cls.members:
            pos = _position(rep, c.values)
            if pos in targets:
                raise CertificateError(f"two guessed reads share position {pos}")
            free = [p for p in candidates if p not in targets.values()]
            if not free:
                raise CertificateError(f"no position carries the values of class {cls.count}")
            targets[pos] = pos if pos in free else free[0]
    rest_new = [i for i in range(n) if i not in targets]
    rest_old = sorted(set(range(n)) - set(targets.values()))
    perm = [0] * n
    for new, old in targets.items():
        perm[new] = old
    for new, old in zip(rest_new, rest_old):
        perm[new] = old
    model = _model(c.values, r.form.symbols, {a: tuple(v) for a, v in layout.items()})
    return model.permuted(perm)


def materialized_model(r: ReducedForm, c: SatCertificate, case: Optional[Case] = None) -> FiniteModel:
    """materialize, then check the model against r and, when given, the input case."""
    model = materialize(r, c)
    if check_model(r.form.matrix_formula(), model, c.values) is False:
        raise CertificateError("materialized model does not satisfy the reduced form")
    if case is not None and check_model(case.formula, model, c.values) is False:
        raise CertificateError("materialized model does not satisfy the input case")
    return model


def _position(term, values: Mapping[str, int]) -> int:
    return eval_term(term, FiniteModel(values.get('N', 0), vars={k: v for k, v in values.items() if k != 'N'}))


# -- the procedure -----------------------------------------------------------

def _decide_arithmetic(problem: SimpleProblem, r: ReducedForm, cfg: SolverConfig,
                       materialize_limit: Optional[int]) -> Verdict:
    verdict = decide(problem.alpha, cfg)
    _require(verdict)
    if verdict.is_unsat:
        return Verdict.unsat()
    n = verdict.values.get('N', 0)
    model = None
    if materialize_limit is not None and n <= materialize_limit:
        model = _model(verdict.values, r.form.symbols)
    return Verdict.sat(values=verdict.values, model=model)


def _solve(system, cfg: SolverConfig, session=None) -> Optional[Dict[str, int]]:
    """Values of a satisfiable system, in the session when one is given."""
    if session is None:
        verdict = decide(system.formula, cfg)
    else:
        session.push()
        try:
            session.add(system.formula)
            verdict = session.check(values=constants_of([system.formula]))
        finally:
            session.pop()
    _require(verdict)
    return verdict.values if verdict.is_sat else None


def _strict_search(problem: SimpleProblem, sigmas: Sequence[SigmaAssignment], support: int,
                   cfg: SolverConfig, max_subsets: int):
    """Subsets of at most `support` assignments, smallest first, each with every member positive."""
    tried = 0
    with open_session(cfg) as session:
        for size in range(0, min(support, len(sigmas)) + 1):
            for subset in combinations(range(len(sigmas)), size):
                tried += 1
                if tried > max_subsets:
                    logger.warning(f"strict mode passed {max_subsets} subsets; finishing with the guarded system")
                    system = build_sigma_system(problem, sigmas, Mode.GUARDED, support)
                    values = _solve(system, cfg)
                    return (system, values) if values is not None else None
                system = build_sigma_system(problem, [sigmas[i] for i in subset], Mode.STRICT)
                values = _solve(system, cfg, session)
                if values is not None:
                    return system, values
    return None


def search_system(problem: SimpleProblem, cfg: SolverConfig, mode: Mode = Mode.GUARDED,
                  max_sigma: Optional[int] = None, max_subsets: Optional[int] = None):
    """(solved system, values) or None when the linear system has no solution."""
    max_sigma = max_sigma or Config.MAX_SIGMA
    max_subsets = max_subsets or Config.MAX_SUBSETS
    support = max_support(problem.k)
    try:
        with open_session(cfg) as session:
            sigmas = enumerate_assignments(problem.basis, problem.alpha, session, max_sigma)
    except ResourceLimitError as e:
        logger.warning(f"{e}; choosing {support} assignment(s) inside the solver")
        system = build_slot_system(problem, support)
        values = _solve(system, cfg)
        return (system, values) if values is not None else None
    if mode is Mode.STRICT:
        return _strict_search(problem, sigmas, support, cfg, max_subsets)
    system = build_sigma_system(problem, sigmas, Mode.GUARDED, support)
    values = _solve(system, cfg)
    return (system, values) if values is not None else None


def decide_reduced(r: ReducedForm, cfg: SolverConfig, mode: Mode = Mode.GUARDED,
                   max_sigma: Optional[int] = None, materialize_limit: Optional[int] = None,
                   case: Optional[Case] = None, max_subsets: Optional[int] = None) -> Verdict:
    """Decide one reduced form; solver failures become Unknown."""
    try:
        problem = SimpleProblem.from_reduced(r)
        if problem.k == 0:
            return _decide_arithmetic(problem, r, cfg, materialize_limit)
        found = search_system(problem, cfg, mode, max_sigma, max_subsets)
        if found is None:
            return Verdict.unsat()
        system, values = found
        cert = certificate_of(system, problem, values)
        if not verify_certificate(r, cert):
            raise CertificateError("solver model does not verify")
        model = None
        n = cert.values.get('N', 0)
        if materialize_limit is not None and n <= materialize_limit:
            model = materialized_model(r, cert, case)
        return Verdict.sat(certificate=cert, values=cert.values, model=model)
    except SolverFailure as e:
        logger.warning(f"reduced form left undecided: {e}")
        return Verdict.unknown(str(e))


def reduce_simple(phi, cfg: SolverConfig) -> List[Tuple[Case, ReducedForm]]:
    """Top-level cases of phi, each split into reduced forms."""
    rewritten = rewrite_bounded_universal(phi).formula
    supply = NameSupply(all_names(rewritten))
    with open_session(cfg) as session:
        cases = split_cases(rewritten, supply, session)
    jobs = []
    for case in cases:
        cls = shape_class(case.formula)
        if not within(cls, FormulaClass.SIMPLE_EFLAT):
            raise FormulaClassError(f"expected a simple formula, got {cls} in case {to_text(case.formula)[:120]}")
        for r in simple_preprocess(to_eflat(case.formula, supply), supply):
            jobs.append((case, r))
    logger.info(f"{len(cases)} case(s), {len(jobs)} reduced form(s)")
    return jobs


def combine(verdicts: Sequence[Verdict]) -> Verdict:
    """First Sat in order; otherwise Unknown if any part is, else Unsat."""
    for v in verdicts:
        if v.is_sat:
            return v
    for v in verdicts:
        if v.is_unknown:
            return v
    return Verdict.unsat()


def decide_simple(phi, cfg: Optional[SolverConfig] = None, mode: Mode = Mode.GUARDED,
                  max_sigma: Optional[int] = None, workers: Optional[int] = None,
                  materialize_limit: Optional[int] = None, timer=None) -> Verdict:
    """Decide a formula whose counting bodies read arrays only at the counting variable."""
    cfg = cfg or Config.solver_config()
    workers = workers or Config.WORKERS
    if materialize_limit is None:
        materialize_limit = Config.MATERIALIZE_LIMIT
    jobs = _staged(timer, 'normalize', lambda: reduce_simple(phi, cfg))

    def run(job):
        case, r = job
        return decide_reduced(r, cfg, mode, max_sigma, materialize_limit, case)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = _staged(timer, 'solve', lambda: list(pool.map(run, jobs)))
        return combine(verdicts)
    verdicts = []
    for job in jobs:
        v = _staged(timer, 'solve', lambda: run(job))
        verdicts.append(v)
        if v.is_sat:
            break
    return combine(verdicts)


def _staged(timer, name: str, thunk):
    if timer is None:
        return thunk()
    with timer.stage(name):
        return thunk()
