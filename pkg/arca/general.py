"""
Decision procedure for E-flat formulas.

After reads at scalars are removed and the bodies partitioned, every index
position satisfies exactly one body once the array values at it are fixed.
Which bodies are reachable at a position depends only on the position, so
positions are grouped by the set S of reachable bodies (a Venn region) and
each group is split among the bodies of S. The resulting formula mentions
no arrays; its counting terms are eliminated and the rest goes to the
solver.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Tuple

from .backend import SolverConfig, SolverStatus, decide, open_session
from .classify import FormulaClass, shape_class, within
from .config import Config
from .counting import eliminate_counting
from .errors import FormulaClassError, ResourceLimitError
from .formula import (
    ZERO, Card, Eq, NameSupply, Read, Var, all_names, conj, contains, exists, le, neg, plus,
    replace_terms, walk,
)
from .normalize import (
    EFlatForm, eliminate_parameter_reads, make_partition, scalar_reads, skolemize, split_cases, to_eflat,
)
from .parser import to_text
from .simple import combine, rewrite_bounded_universal
from .verdict import Verdict

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VennRegion:
    members: Tuple[int, ...]      # bodies reachable at the positions of this region
    body: object
    count: str


@dataclass(frozen=True)
class VennSystem:
    alpha: object
    index: str
    regions: Tuple[VennRegion, ...]
    splits: Tuple[Tuple[int, int, str], ...]     # (body, region, z_{l,S})
    results: Tuple[str, ...]

    def card_atoms(self) -> List:
        return [Eq(Card(self.index, r.body), Var(r.count)) for r in self.regions]

    def linear(self) -> List:
        parts = []
        for s, region in enumerate(self.regions):
            names = [z for l, r, z in self.splits if r == s]
            parts.append(Eq(Var(region.count), plus(*(Var(z) for z in names))))
        for l, result in enumerate(self.results):
            names = [z for body, _, z in self.splits if body == l]
            parts.append(Eq(Var(result), plus(*(Var(z) for z in names))))
        parts += [le(ZERO, Var(z)) for _, _, z in self.splits]
        return parts

    def formula(self):
        return conj(self.alpha, *self.card_atoms(), *self.linear())

    @property
    def fresh(self) -> Tuple[str, ...]:
        return tuple(r.count for r in self.regions) + tuple(z for _, _, z in self.splits)


def build_venn_system(e: EFlatForm, supply: Optional[NameSupply] = None,
                      max_cards: Optional[int] = None) -> VennSystem:
    """Array-free system over one count per subset of the (partitioned) bodies."""
    max_cards = max_cards or Config.MAX_VENN_CARDS
    if scalar_reads(e):
        raise FormulaClassError("the Venn reduction needs a form without reads at scalars")
    if e.k > max_cards:
        raise ResourceLimitError(f"{e.k} counting bodies exceed the Venn limit of {max_cards}")
    supply = supply or NameSupply(e.names())
    arrays = sorted({n.array for c in e.cards for n in walk(c.body) if isinstance(n, Read)})
    u = {a: supply.fresh(f"u!{a}") for a in arrays}
    mapping = {Read(a, Var(e.index)): Var(name) for a, name in u.items()}
    reachable = [exists(sorted(u.values()), replace_terms(c.body, mapping)) for c in e.cards]
    regions, splits = [], []
    for bits in product((1, 0), repeat=e.k):
        members = tuple(l for l, bit in enumerate(bits) if bit)
        body = conj(*(r if bit else neg(r) for r, bit in zip(reachable, bits)))
        region = VennRegion(members, body, supply.fresh('zS'))
        for l in members:
            splits.append((l, len(regions), supply.fresh('zlS')))
        regions.append(region)
    logger.debug(f"Venn system: {len(regions)} region(s), {len(splits)} split variable(s)")
    return VennSystem(e.alpha, e.index, tuple(regions), tuple(splits), tuple(c.result for c in e.cards))


def venn_arithmetic(system: VennSystem, supply: NameSupply):
    """The Venn system with its counting terms eliminated and positive existentials dropped."""
    return skolemize(eliminate_counting(system.formula(), supply), supply)


def reduce_general(phi, cfg: SolverConfig) -> List[EFlatForm]:
    rewritten = rewrite_bounded_universal(phi).formula
    supply = NameSupply(all_names(rewritten))
    with open_session(cfg) as session:
        cases = split_cases(rewritten, supply, session)
    forms: List[EFlatForm] = []
    for case in cases:
        cls = shape_class(case.formula)
        if not within(cls, FormulaClass.EFLAT):
            raise FormulaClassError(f"expected an E-flat formula, got {cls} in case {to_text(case.formula)[:120]}")
        for e in eliminate_parameter_reads(to_eflat(case.formula, supply), supply):
            forms.append(make_partition(e, supply))
    logger.info(f"{len(cases)} case(s), {len(forms)} partitioned form(s)")
    return forms


def decide_form(e: EFlatForm, cfg: SolverConfig, max_cards: Optional[int] = None) -> Verdict:
    supply = NameSupply(e.names())
    system = build_venn_system(e, supply, max_cards)
    arithmetic = venn_arithmetic(system, supply)
    if contains(arithmetic, (Card, Read)):
        raise FormulaClassError("Venn reduction left counting terms or reads behind")
    verdict = decide(arithmetic, cfg)
    if verdict.status in (SolverStatus.UNKNOWN, SolverStatus.PROCESS_ERROR):
        return Verdict.unknown(verdict.detail or str(verdict.status))
    if verdict.is_unsat:
        return Verdict.unsat()
    return Verdict.sat(values=_visible(verdict.values, e))


def _visible(values: Dict[str, int], e: EFlatForm) -> Dict[str, int]:
    keep = set(e.symbols.params) | set(e.symbols.vars) | set(e.exists) | {'N'}
    return {k: v for k, v in values.items() if k in keep}


def decide_eflat(phi, cfg: Optional[SolverConfig] = None, max_cards: Optional[int] = None,
                 workers: Optional[int] = None, timer=None) -> Verdict:
    """Decide an E-flat (or flat) formula; Sat verdicts carry scalar values only."""
    cfg = cfg or Config.solver_config()
    workers = workers or Config.WORKERS
    if timer is not None:
        with timer.stage('normalize'):
            forms = reduce_general(phi, cfg)
    else:
        forms = reduce_general(phi, cfg)

    def run(e: EFlatForm) -> Verdict:
        if timer is None:
            return decide_form(e, cfg, max_cards)
        with timer.stage('solve'):
            return decide_form(e, cfg, max_cards)

    if workers > 1 and len(forms) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return combine(list(pool.map(run, forms)))
    verdicts: List[Verdict] = []
    for e in forms:
        v = run(e)
        verdicts.append(v)
        if v.is_sat:
            break
    return combine(verdicts)
