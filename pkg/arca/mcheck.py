"""
Bounded model checking and invariant checking for parametric systems.

A system file (.arcs) declares parameters, state variables, state arrays and
rigid arrays, then gives axioms, the initial condition, the transition
relation (primed symbols denote the next state), the unsafe condition and
optionally a candidate invariant:

    (system (params p ...) (state-vars v ...) (state-arrays a ...) (arrays f ...)
            (axiom F)* (init F) (trans F) (unsafe F) (invariant F)?)

State symbols of step k are renamed to `name__k`; user names may not
contain `__`.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from .classify import FormulaClass, shape_class, within
from .errors import ArcaSyntaxError, SymbolError, SystemSpecError
from .formula import conj, free_symbols, neg, rename_symbols
from .normalize import split_cases
from .parser import Atom, FormulaReader, SExpr, SList, check_symbol, read_sexprs
from .semantics import FiniteModel, eval_finite, quantifier_range
from .simple import decide_simple, rewrite_bounded_universal
from .verdict import Verdict

logger = logging.getLogger(__name__)

Decider = Callable[[object], Verdict]

_SECTIONS = ('params', 'state-vars', 'state-arrays', 'arrays')
_FORMULAS = ('axiom', 'init', 'trans', 'unsafe', 'invariant')


@dataclass(frozen=True)
class SystemSpec:
    params: Tuple[str, ...]
    state_vars: Tuple[str, ...]
    state_arrays: Tuple[str, ...]
    rigid_arrays: Tuple[str, ...]
    init: object
    trans: object
    unsafe: Optional[object] = None
    invariant: Optional[object] = None
    axioms: Tuple = ()

    @property
    def arrays(self) -> Tuple[str, ...]:
        return self.state_arrays + self.rigid_arrays

    def state_names(self, k: int) -> Dict[str, str]:
        return {v: step_name(v, k) for v in self.state_vars}

    def state_arrays_at(self, k: int) -> Dict[str, str]:
        return {a: step_name(a, k) for a in self.state_arrays}

    def at(self, phi, k: int):
        """phi over the state symbols of step k."""
        return rename_symbols(phi, self.state_names(k), self.state_arrays_at(k))

    def step(self, k: int):
        """τ from step k to step k+1."""
        names = self.state_names(k)
        names.update({f"{v}'": step_name(v, k + 1) for v in self.state_vars})
        arrays = self.state_arrays_at(k)
        arrays.update({f"{a}'": step_name(a, k + 1) for a in self.state_arrays})
        return rename_symbols(self.trans, names, arrays)

    def axioms_at(self, k: int) -> List:
        return [self.at(a, k) for a in self.axioms]


def step_name(name: str, k: int) -> str:
    return f"{name}__{k}"


# -- loading -----------------------------------------------------------------

def _names(form: SList) -> List[str]:
    out = []
    for item in form.items[1:]:
        if not isinstance(item, Atom):
            raise ArcaSyntaxError("expected a symbol", item.line, item.column)
        check_symbol(item.text, item)
        if '__' in item.text or "'" in item.text:
            raise SymbolError(f"'{item.text}': '__' and primes are reserved in system files "
                              f"(line {item.line}, column {item.column})")
        out.append(item.text)
    return out


def _atoms(expr: SExpr) -> Iterator[Atom]:
    if isinstance(expr, Atom):
        yield expr
    else:
        for item in expr.items:
            yield from _atoms(item)


def _check_simple(section: str, phi) -> None:
    for case in split_cases(rewrite_bounded_universal(phi).formula):
        cls = shape_class(case.formula)
        if not within(cls, FormulaClass.SIMPLE_EFLAT):
            raise SystemSpecError(f"{section} is not simple flat (a case classifies as {cls})")


def load_system(text: str, require_unsafe: bool = True) -> SystemSpec:
    """Parse a system file; components are checked to be simple flat."""
    forms = read_sexprs(text)
    if len(forms) != 1 or not isinstance(forms[0], SList) or not forms[0].items \
            or not isinstance(forms[0].items[0], Atom) or forms[0].items[0].text != 'system':
        raise SystemSpecError("a system file holds exactly one (system ...) form")
    decls: Dict[str, List[str]] = {s: [] for s in _SECTIONS}
    bodies: Dict[str, List[SExpr]] = {s: [] for s in _FORMULAS}
    for form in forms[0].items[1:]:
        if not isinstance(form, SList) or not form.items or not isinstance(form.items[0], Atom):
            raise ArcaSyntaxError("expected a section", form.line, form.column)
        head = form.items[0].text
        if head in _SECTIONS:
            decls[head] += _names(form)
        elif head in _FORMULAS:
            if len(form.items) != 2:
                raise ArcaSyntaxError(f"'{head}' takes one formula", form.line, form.column)
            bodies[head].append(form.items[1])
        else:
            raise ArcaSyntaxError(f"unknown section '{head}'", form.line, form.column)
    for single in ('init', 'trans', 'unsafe', 'invariant'):
        if len(bodies[single]) > 1:
            raise SystemSpecError(f"section '{single}' given more than once")
    for required in ('init', 'trans'):
        if not bodies[required]:
            raise SystemSpecError(f"missing section '{required}'")
    if require_unsafe and not bodies['unsafe']:
        raise SystemSpecError("missing section 'unsafe'")

    kinds: Dict[str, str] = {'N': 'param'}
    for section, kind in (('params', 'param'), ('state-vars', 'var'),
                          ('state-arrays', 'array'), ('arrays', 'array')):
        for name in decls[section]:
            if name == 'N' and section == 'params':
                continue
            if name in kinds:
                raise SymbolError(f"'{name}' is declared twice")
            kinds[name] = kind
    primed = {f"{v}'": 'var' for v in decls['state-vars']}
    primed.update({f"{a}'": 'array' for a in decls['state-arrays']})

    for section in ('axiom', 'init', 'unsafe', 'invariant'):
        for expr in bodies[section]:
            for atom in _atoms(expr):
                if atom.text in primed:
                    raise SystemSpecError(f"primed symbol '{atom.text}' outside trans "
                                          f"(line {atom.line}, column {atom.column})")
    reader = FormulaReader(kinds)
    trans_reader = FormulaReader({**kinds, **primed})
    read = lambda section: reader.formula(bodies[section][0]) if bodies[section] else None

    spec = SystemSpec(
        params=tuple(p for p in decls['params'] if p != 'N'),
        state_vars=tuple(decls['state-vars']),
        state_arrays=tuple(decls['state-arrays']),
        rigid_arrays=tuple(decls['arrays']),
        init=read('init'),
        trans=trans_reader.formula(bodies['trans'][0]),
        unsafe=read('unsafe'),
        invariant=read('invariant'),
        axioms=tuple(reader.formula(e) for e in bodies['axiom']),
    )
    for section, phi in (('init', spec.init), ('trans', spec.trans), ('unsafe', spec.unsafe),
                         ('invariant', spec.invariant)):
        if phi is not None:
            _check_simple(section, phi)
    for phi in spec.axioms:
        _check_simple('axiom', phi)
    logger.info(f"loaded system with {len(spec.state_vars)} state variable(s), "
                f"{len(spec.state_arrays)} state array(s), {len(spec.rigid_arrays)} rigid array(s)")
    return spec


# -- obligations -------------------------------------------------------------

def unroll_conjuncts(spec: SystemSpec, d: int) -> List:
    """ι(0), τ(0,1) … τ(d−1,d), υ(d) and the axioms at every step."""
    if d < 0:
        raise ValueError(f"depth must be non-negative, got {d}")
    if spec.unsafe is None:
        raise SystemSpecError("unrolling needs an unsafe condition")
    parts = []
    for k in range(d + 1):
        parts += spec.axioms_at(k)
    parts.append(spec.at(spec.init, 0))
    parts += [spec.step(k) for k in range(d)]
    parts.append(spec.at(spec.unsafe, d))
    return parts


def unroll(spec: SystemSpec, d: int):
    return conj(*unroll_conjuncts(spec, d))


@dataclass(frozen=True)
class BmcResult:
    verdicts: Tuple[Verdict, ...]
    max_depth: int

    @property
    def counterexample_depth(self) -> Optional[int]:
        for d, v in enumerate(self.verdicts):
            if v.is_sat:
                return d
            if v.is_unknown:
                return None
        return None

    @property
    def unknown_depth(self) -> Optional[int]:
        for d, v in enumerate(self.verdicts):
            if v.is_sat:
                return None
            if v.is_unknown:
                return d
        return None

    @property
    def safe(self) -> bool:
        return len(self.verdicts) == self.max_depth + 1 and all(v.is_unsat for v in self.verdicts)

    @property
    def counterexample(self) -> Optional[Verdict]:
        d = self.counterexample_depth
        return None if d is None else self.verdicts[d]

    def __str__(self) -> str:
        if self.safe:
            return f"safe up to depth {self.max_depth}"
        d = self.counterexample_depth
        if d is not None:
            return f"counterexample at depth {d}"
        return f"unknown at depth {self.unknown_depth} ({self.verdicts[self.unknown_depth].reason})"


def bmc(spec: SystemSpec, max_depth: int, decider: Optional[Decider] = None,
        workers: int = 1, on_verdict: Optional[Callable[[int, Verdict], None]] = None) -> BmcResult:
    """Check unrollings of depth 0..max_depth, stopping at the first that is not unsat."""
    if max_depth < 0:
        raise ValueError(f"depth must be non-negative, got {max_depth}")
    if spec.unsafe is None:
        raise SystemSpecError("bmc needs an unsafe condition")
    decider = decider or decide_simple

    def check(d: int) -> Verdict:
        verdict = decider(unroll(spec, d))
        logger.info(f"depth {d}: {verdict}")
        if on_verdict is not None:
            on_verdict(d, verdict)
        return verdict

    verdicts: List[Verdict] = []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for v in pool.map(check, range(max_depth + 1)):
                verdicts.append(v)
                if not v.is_unsat:
                    break
    else:
        for d in range(max_depth + 1):
            v = check(d)
            verdicts.append(v)
            if not v.is_unsat:
                break
    return BmcResult(tuple(verdicts), max_depth)


@dataclass(frozen=True)
class IcResult:
    initiation: Verdict
    consecution: Verdict
    safety: Optional[Verdict] = None

    @property
    def confirmed(self) -> bool:
        return self.initiation.is_unsat and self.consecution.is_unsat and \
            (self.safety is None or self.safety.is_unsat)

    @property
    def refuted(self) -> bool:
        return any(v is not None and v.is_sat for v in self.items().values())

    def items(self) -> Dict[str, Optional[Verdict]]:
        return {'initiation': self.initiation, 'consecution': self.consecution, 'safety': self.safety}

    def __str__(self) -> str:
        if self.confirmed:
            return "invariant confirmed"
        if self.refuted:
            failed = [name for name, v in self.items().items() if v is not None and v.is_sat]
            return f"invariant refuted ({', '.join(failed)})"
        return "invariant check unknown"


def ic_obligations(spec: SystemSpec, phi) -> Dict[str, object]:
    ax0, ax1 = spec.axioms_at(0), spec.axioms_at(1)
    obligations = {
        'initiation': conj(*ax0, spec.at(spec.init, 0), neg(spec.at(phi, 0))),
        'consecution': conj(*ax0, *ax1, spec.at(phi, 0), spec.step(0), neg(spec.at(phi, 1))),
    }
    if spec.unsafe is not None:
        obligations['safety'] = conj(*ax0, spec.at(phi, 0), spec.at(spec.unsafe, 0))
    return obligations


def invariant_check(spec: SystemSpec, phi=None, decider: Optional[Decider] = None,
                    workers: int = 1) -> IcResult:
    """Initiation, consecution and safety of the candidate invariant phi."""
    phi = spec.invariant if phi is None else phi
    if phi is None:
        raise SystemSpecError("no candidate invariant given")
    _check_simple('invariant', phi)
    decider = decider or decide_simple
    obligations = ic_obligations(spec, phi)
    names = list(obligations)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = dict(zip(names, pool.map(decider, [obligations[n] for n in names])))
    else:
        verdicts = {n: decider(obligations[n]) for n in names}
    for n, v in verdicts.items():
        logger.info(f"{n}: {v}")
    return IcResult(verdicts['initiation'], verdicts['consecution'], verdicts.get('safety'))


# -- traces ------------------------------------------------------------------

@dataclass(frozen=True)
class State:
    step: int
    vars: Dict[str, int] = field(default_factory=dict)
    arrays: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    def describe(self) -> str:
        parts = [f"{k} = {v}" for k, v in sorted(self.vars.items())]
        parts += [f"{k} = {list(v)}" for k, v in sorted(self.arrays.items())]
        return f"step {self.step}: " + ', '.join(parts)


def trace(spec: SystemSpec, depth: int, model: FiniteModel) -> List[State]:
    """Per-step states read off a model of unroll(spec, depth)."""
    values = model.values()
    states = []
    for k in range(depth + 1):
        vs = {v: values[step_name(v, k)] for v in spec.state_vars if step_name(v, k) in values}
        arrs = {a: tuple(model.arrays[step_name(a, k)]) for a in spec.state_arrays
                if step_name(a, k) in model.arrays}
        states.append(State(k, vs, arrs))
    return states


def _completed(model: FiniteModel, phi) -> FiniteModel:
    symbols = free_symbols(phi)
    params = dict(model.params)
    params.update({p: 0 for p in symbols.params if p != 'N' and p not in params})
    vars_ = dict(model.vars)
    vars_.update({v: 0 for v in symbols.vars if v not in vars_ and v not in params})
    arrays = dict(model.arrays)
    arrays.update({a: (0,) * max(model.n, 0) for a in symbols.arrays if a not in arrays})
    return FiniteModel(model.n, params, vars_, arrays)


def replay(spec: SystemSpec, depth: int, model: FiniteModel) -> bool:
    """True if every unrolled conjunct holds in the model (unvalued symbols read as 0)."""
    parts = unroll_conjuncts(spec, depth)
    full = _completed(model, conj(*parts))
    reach = max([abs(v) for v in full.values().values()] + [1]) + 1
    qrange = quantifier_range(full.n, reach)
    for k, part in enumerate(parts):
        if not eval_finite(part, full, qrange=qrange):
            logger.warning(f"conjunct {k} of the depth-{depth} unrolling fails in the model")
            return False
    return True
