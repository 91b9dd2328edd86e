from unittest.mock import patch

import pytest

from arca.config import Config
from arca.errors import CertificateError, FormulaClassError, ResourceLimitError
from arca.formula import FALSE, N, Card, Eq, Num, Read, Var, conj, le
from arca.normalize import ReducedForm, simple_preprocess, to_eflat
from arca.oracle import Bounds, crosscheck
from arca.semantics import FiniteModel, eval_finite, quantifier_range
from arca.backend import open_session
from arca.simple import (
    Mode, SatCertificate, SigmaAssignment, SimpleProblem, build_sigma_system, build_slot_system,
    certificate_of, decide_simple, enumerate_assignments, holds, materialize, max_support,
    rewrite_bounded_universal, verify_certificate,
)

from generators import read_formula, simple_flat

FORALL_ZERO = "(forall (x) (=> (and (<= 0 x) (< x N)) (= (select a x) 0)))"
TWO_CARDS = ("(declare-array a)"
             "(assert (and (= (card x (= (select a x) 0)) 1) (= (card x (= (select a x) 1)) 1)))")


def reduced(text: str) -> ReducedForm:
    _, phi = read_formula(text)
    forms = simple_preprocess(to_eflat(phi))
    assert len(forms) == 1
    return forms[0]


@pytest.fixture
def two_zeros():
    """Exactly two positions hold 0 and N = 3."""
    return reduced("(declare-array a)(assert (and (= (card x (= (select a x) 0)) 2) (= N 3)))")


def certificate(r: ReducedForm, sigmas, mults, witnesses, **values) -> SatCertificate:
    problem = SimpleProblem.from_reduced(r)
    z = r.form.cards[0].result
    full = {'N': 3, z: 2}
    full.update(values)
    return SatCertificate(problem.basis.atoms, tuple(SigmaAssignment(s) for s in sigmas),
                          tuple(mults), tuple(witnesses), full)


class TestSupportBound:
    """Bound on the assignments that need a positive multiplicity."""

    @pytest.mark.parametrize('k, bound', [(1, 4), (2, 12), (3, 22)])
    def test_values(self, k, bound):
        assert max_support(k) == bound

    def test_needs_a_constraint(self):
        with pytest.raises(ValueError):
            max_support(0)


class TestBoundedUniversal:
    """∀x (0 ≤ x < N → β) as a pinned count."""

    def test_rewritten(self):
        _, phi = read_formula(f"(declare-array a)(assert {FORALL_ZERO})")
        out = rewrite_bounded_universal(phi)
        card = Card('x', Eq(Read('a', Var('x')), Num(0)))
        assert out.formula == Eq(N, card)
        assert out.pinned == (card,)

    def test_ground_body_folded(self):
        _, phi = read_formula("(assert (forall (x) (=> (and (<= 0 x) (< x N)) (< x x))))")
        out = rewrite_bounded_universal(phi)
        assert out.formula == Eq(N, Card('x', FALSE))

    def test_unguarded_forall_untouched(self):
        _, phi = read_formula("(assert (forall (x) (< x N)))")
        out = rewrite_bounded_universal(phi)
        assert out.formula == phi
        assert out.pinned == ()

    def test_extra_guard_kept_in_body(self):
        """Guards beyond the range move into the counted body."""
        _, phi = read_formula(
            "(declare-array a)(declare-array F)"
            "(assert (forall (x) (=> (and (<= 0 x) (< x N) (= (select F x) 0)) (= (select a x) 1))))")
        out = rewrite_bounded_universal(phi)
        assert len(out.pinned) == 1
        assert eval_finite(out.formula, FiniteModel(2, arrays={'a': (1, 7), 'F': (0, 1)}))
        assert not eval_finite(out.formula, FiniteModel(2, arrays={'a': (1, 7), 'F': (0, 0)}))


class TestProblem:
    """Atom basis and the linear system."""

    def test_pinned_basis(self):
        r = reduced("(declare-array a)(assert (= (card x (= (select a x) 0)) N))")
        problem = SimpleProblem.from_reduced(r)
        assert problem.k == 1
        assert problem.basis.pinned == 1
        assert problem.basis.provenance(0) == 'universal-betas'
        (array, witness), = problem.basis.witnesses
        assert array == 'a'
        assert problem.bodies == (Eq(Var(witness), Num(0)),)

    def test_pinned_bodies_first(self):
        """Pinned bodies lead the basis even when they read no array."""
        r = reduced("(declare-array a)(assert (and (= (card x true) N) (< (card x (= (select a x) 1)) 2)))")
        problem = SimpleProblem.from_reduced(r)
        assert len(problem.basis) == 2
        assert problem.basis.provenance(1) == 'bodies'

    def test_truth(self):
        """Bodies without witnesses stay out of the basis and are evaluated directly."""
        r = reduced("(declare-array a)(assert (and (= (card x (= (select a x) 0)) 1) (= (card x true) 3)))")
        problem = SimpleProblem.from_reduced(r)
        assert len(problem.basis) == 1
        assert problem.truth(SigmaAssignment((0,))) == (0, 1)

    def test_guarded_system(self, two_zeros):
        problem = SimpleProblem.from_reduced(two_zeros)
        sigmas = [SigmaAssignment((1,)), SigmaAssignment((0,))]
        system = build_sigma_system(problem, sigmas, Mode.GUARDED, support=4)
        assert len(system.multiplicities) == 2
        assert len(system.indicators) == 2
        assert system.incidence.shape == (1, 2)
        assert system.incidence.tolist() == [[1, 0]]
        assert set(system.multiplicities) <= system.internal

    def test_strict_system(self, two_zeros):
        problem = SimpleProblem.from_reduced(two_zeros)
        system = build_sigma_system(problem, [SigmaAssignment((1,))], Mode.STRICT)
        assert system.indicators == ()
        assert system.mode is Mode.STRICT

    def test_parameter_body_is_an_atom(self):
        """A body over N alone varies between models, so it joins the basis."""
        r = reduced("(declare-var y)(assert (and (= (card x (< N 3)) y) (= N 5) (= y 5)))")
        problem = SimpleProblem.from_reduced(r)
        assert problem.basis.atoms == problem.bodies
        assert problem.truth(SigmaAssignment((0,))) == (0,)
        assert problem.truth(SigmaAssignment((1,))) == (1,)

    def test_declared_parameter_body(self):
        r = reduced("(declare-param p)(declare-var y)(assert (= (card x (< p 3)) y))")
        problem = SimpleProblem.from_reduced(r)
        assert len(problem.basis) == 1
        assert problem.basis.witnesses == ()

    def test_slot_system(self, two_zeros):
        """One multiplicity, witness block and truth variable per slot."""
        problem = SimpleProblem.from_reduced(two_zeros)
        system = build_slot_system(problem, max_support(problem.k))
        assert len(system.multiplicities) == 4
        assert len(system.witnesses) == 4
        assert all(len(row) == 1 for row in system.truths)
        t = system.truths[0][0]
        assert t in system.internal
        assert system.assignment(0, {t: 1}) == SigmaAssignment((1,))
        assert system.assignment(0, {t: 0}) == SigmaAssignment((0,))

    def test_pinned_slots_have_no_truth_variable(self):
        r = reduced("(declare-array a)(assert (= (card x (= (select a x) 0)) N))")
        system = build_slot_system(SimpleProblem.from_reduced(r), 2)
        assert system.truths == ((None,), (None,))
        assert system.assignment(1, {}) == SigmaAssignment((1,))


class TestCertificates:
    """Checking and materializing certificates without a solver."""

    def test_valid(self, two_zeros):
        c = certificate(two_zeros, [(1,), (0,)], [2, 1], [{'a': 0}, {'a': 5}])
        assert verify_certificate(two_zeros, c)
        assert verify_certificate(two_zeros, c, materialize_limit=8)

    def test_materialized_model(self, two_zeros):
        c = certificate(two_zeros, [(1,), (0,)], [2, 1], [{'a': 0}, {'a': 5}])
        model = materialize(two_zeros, c)
        assert model.n == 3
        assert sorted(model.arrays['a']) == [0, 0, 5]

    def test_wrong_count(self, two_zeros):
        z = two_zeros.form.cards[0].result
        c = certificate(two_zeros, [(1,), (0,)], [1, 2], [{'a': 0}, {'a': 5}], **{z: 2})
        assert not verify_certificate(two_zeros, c)

    def test_witness_does_not_realize_assignment(self, two_zeros):
        c = certificate(two_zeros, [(1,), (0,)], [2, 1], [{'a': 4}, {'a': 5}])
        assert not verify_certificate(two_zeros, c)

    def test_multiplicities_must_sum_to_n(self, two_zeros):
        c = certificate(two_zeros, [(1,), (0,)], [2, 2], [{'a': 0}, {'a': 5}])
        assert not verify_certificate(two_zeros, c)

    def test_shape_mismatch(self, two_zeros):
        c = certificate(two_zeros, [(1, 0)], [3], [{'a': 0}])
        with pytest.raises(CertificateError):
            verify_certificate(two_zeros, c)

    def test_json(self, two_zeros):
        c = certificate(two_zeros, [(1,), (0,)], [2, 1], [{'a': 0}, {'a': 5}])
        data = c.to_json()
        assert data['values']['N'] == 3
        assert [s['multiplicity'] for s in data['sigma']] == [2, 1]
        assert data['sigma'][0]['assignment'] == '1'
        assert c.support == 2

    def test_slot_certificate(self, two_zeros):
        """Solved slots become a certificate; empty slots are dropped."""
        problem = SimpleProblem.from_reduced(two_zeros)
        system = build_slot_system(problem, 3)
        z = problem.results[0]
        values = {'N': 3, z: 2}
        for (v, row, block), m, t, w in zip(
                zip(system.multiplicities, system.truths, system.witnesses), (2, 1, 0), (1, 0, 1), (0, 5, 0)):
            values[v] = m
            values[row[0]] = t
            values[block[0][1]] = w
        c = certificate_of(system, problem, values)
        assert c.values == {'N': 3, z: 2}
        assert c.multiplicities == (2, 1)
        assert c.sigmas == (SigmaAssignment((1,)), SigmaAssignment((0,)))
        assert c.cards == 1
        assert verify_certificate(two_zeros, c)

    def test_large_n_checked_on_scalars(self):
        """Multiplicities past 64 bits are checked without building arrays."""
        r = reduced("(declare-array a)(assert (= (card x (= (select a x) 0)) N))")
        z = r.form.cards[0].result
        big = 10 ** 20 + 1
        c = certificate(r, [(1,)], [big], [{'a': 0}], N=big, **{z: big})
        assert verify_certificate(r, c)
        assert verify_certificate(r, c, materialize_limit=64)
        wrong = certificate(r, [(1,)], [big], [{'a': 0}], N=big, **{z: big - 1})
        assert not verify_certificate(r, wrong)

    def test_quantified_values_decided_exactly(self):
        """Quantifiers over huge values are eliminated, not enumerated."""
        _, f = read_formula("(declare-var y)(assert (exists (u) (= (+ u u) y)))")
        assert holds(f, {'y': 10 ** 30})
        assert not holds(f, {'y': 10 ** 30 + 1})


@pytest.mark.solver
class TestEnumeration:
    """Consistent assignments of the basis."""

    def test_exclusive_atoms(self, solver_cfg):
        """a(x) = 0 and a(x) = 1 never hold together."""
        r = reduced("(declare-array a)"
                    "(assert (and (= (card x (= (select a x) 0)) 1) (= (card x (= (select a x) 1)) 1)))")
        problem = SimpleProblem.from_reduced(r)
        with open_session(solver_cfg) as session:
            sigmas = enumerate_assignments(problem.basis, problem.alpha, session)
            assert session.depth == 0
        assert [s.values for s in sigmas] == [(1, 0), (0, 1), (0, 0)]

    def test_cap(self, solver_cfg):
        r = reduced("(declare-array a)"
                    "(assert (and (= (card x (= (select a x) 0)) 1) (= (card x (= (select a x) 1)) 1)))")
        problem = SimpleProblem.from_reduced(r)
        with open_session(solver_cfg) as session:
            with pytest.raises(ResourceLimitError):
                enumerate_assignments(problem.basis, problem.alpha, session, max_sigma=2)

    def test_overflow_lets_the_solver_choose(self, solver_cfg):
        """Past the cap the assignments become solver variables instead of an error."""
        _, phi = read_formula(TWO_CARDS)
        v = decide_simple(phi, solver_cfg, max_sigma=1)
        assert v.is_sat
        assert v.certificate.support <= max_support(2)
        assert not crosscheck(phi, v).contradiction

    def test_overflow_unsat(self, solver_cfg):
        _, phi = read_formula(TWO_CARDS + "(assert (= N 1))")
        assert decide_simple(phi, solver_cfg, max_sigma=1).is_unsat

    def test_strict_subset_cap(self, solver_cfg):
        """Strict mode past its subset cap finishes with the guarded system."""
        _, unsat = read_formula(TWO_CARDS + "(assert (= N 1))")
        _, sat = read_formula(TWO_CARDS)
        with patch.object(Config, 'MAX_SUBSETS', 1):
            assert decide_simple(unsat, solver_cfg, Mode.STRICT).is_unsat
            assert decide_simple(sat, solver_cfg, Mode.STRICT).is_sat


@pytest.mark.solver
class TestDecideSimple:
    """End-to-end decisions."""

    def test_write_formula_sat(self, solver_cfg, write_formula):
        phi = conj(write_formula, le(N, Num(5)))
        v = decide_simple(phi, solver_cfg)
        assert v.is_sat
        assert v.model is not None
        qrange = quantifier_range(v.model.n, max(abs(x) for x in v.model.values().values()) + 2)
        assert eval_finite(phi, v.model, qrange=qrange)
        assert not crosscheck(phi, v).contradiction

    def test_write_formula_unsat(self, solver_cfg, benchmarks):
        _, phi = read_formula((benchmarks / 'write_unsat.arca').read_text())
        assert decide_simple(phi, solver_cfg).is_unsat

    def test_strict_mode_agrees(self, solver_cfg, write_formula, benchmarks):
        assert decide_simple(write_formula, solver_cfg, Mode.STRICT).is_sat
        _, phi = read_formula((benchmarks / 'write_unsat.arca').read_text())
        assert decide_simple(phi, solver_cfg, Mode.STRICT).is_unsat

    def test_write_frame_unsat(self, solver_cfg, benchmarks):
        """A changed position other than y contradicts the write formula in both modes."""
        _, phi = read_formula((benchmarks / 'write_frame.arca').read_text())
        assert decide_simple(phi, solver_cfg).is_unsat
        assert decide_simple(phi, solver_cfg, Mode.STRICT).is_unsat

    def test_parameter_body_counted_per_model(self, solver_cfg):
        """♯{x | N < 3} is 0 when N = 5 and N when N = 2."""
        _, phi = read_formula("(declare-var y)(assert (and (= (card x (< N 3)) y) (= N 5) (= y 5)))")
        assert decide_simple(phi, solver_cfg).is_unsat
        _, phi = read_formula("(declare-var y)(assert (and (= (card x (< N 3)) y) (= N 2) (= y 2)))")
        assert decide_simple(phi, solver_cfg).is_sat

    def test_declared_parameter_body(self, solver_cfg):
        _, phi = read_formula("(declare-param p)(declare-var y)"
                              "(assert (and (= (card x (< p 3)) y) (= y N) (= N 2)))")
        v = decide_simple(phi, solver_cfg)
        assert v.is_sat
        assert v.values['p'] < 3
        _, phi = read_formula("(declare-param p)(declare-var y)"
                              "(assert (and (= (card x (< p 3)) y) (= y 1) (= N 2)))")
        assert decide_simple(phi, solver_cfg).is_unsat

    def test_large_n(self, solver_cfg):
        """N past 64 bits: a checked certificate and no arrays."""
        _, phi = read_formula("(declare-array a)"
                              "(assert (and (= (card x (= (select a x) 0)) N) (= N 100000000000000000001)))")
        v = decide_simple(phi, solver_cfg)
        assert v.is_sat
        assert v.model is None
        assert v.certificate.multiplicities == (10 ** 20 + 1,)

    def test_materialized_once(self, solver_cfg, write_formula):
        phi = conj(write_formula, le(N, Num(5)))
        with patch('arca.simple.materialize', wraps=materialize) as spy:
            assert decide_simple(phi, solver_cfg).model is not None
        assert spy.call_count == 1

    def test_everything_counted(self, solver_cfg):
        """♯{x | true} = N: the one assignment has multiplicity N."""
        _, phi = read_formula("(assert (and (= (card x true) N) (= N 4)))")
        v = decide_simple(phi, solver_cfg)
        assert v.is_sat
        assert v.certificate.multiplicities == (4,)

    def test_universal_contradiction(self, solver_cfg):
        _, phi = read_formula(
            f"(declare-array a)(declare-var y)"
            f"(assert (and {FORALL_ZERO} (<= 0 y) (< y N) (= (select a y) 1)))")
        assert decide_simple(phi, solver_cfg).is_unsat

    def test_universal_sat(self, solver_cfg):
        _, phi = read_formula(
            f"(declare-array a)(declare-var y)"
            f"(assert (and {FORALL_ZERO} (<= 0 y) (< y N) (<= N 5) (= (select a y) 0)))")
        v = decide_simple(phi, solver_cfg)
        assert v.is_sat
        assert set(v.model.arrays['a']) == {0}

    def test_empty_universal_body_forces_zero_size(self, solver_cfg):
        _, phi = read_formula("(assert (and (forall (x) (=> (and (<= 0 x) (< x N)) (< x x))) (>= N 1)))")
        assert decide_simple(phi, solver_cfg).is_unsat

    def test_arithmetic_only(self, solver_cfg):
        _, phi = read_formula("(declare-var y)(assert (and (< N y) (< y 3)))")
        v = decide_simple(phi, solver_cfg)
        assert v.is_sat
        assert v.values['N'] < v.values['y'] < 3

    def test_parallel_cases(self, solver_cfg):
        _, phi = read_formula(
            "(declare-array a)(declare-var y)"
            "(assert (or (= (card x (= (select a x) 1)) (+ N 1)) (= (select a y) 2)))")
        assert decide_simple(phi, solver_cfg, workers=2).is_sat

    def test_wrong_class(self, solver_cfg):
        _, phi = read_formula("(declare-array a)(declare-var z)(assert (= (card x (= (+ (select a x) x) N)) z))")
        with pytest.raises(FormulaClassError):
            decide_simple(phi, solver_cfg)


class TestSolverFailure:
    """Backend failures surface as Unknown."""

    def test_missing_solver(self, missing_solver_cfg, write_formula):
        v = decide_simple(write_formula, missing_solver_cfg)
        assert v.is_unknown
        assert 'not found' in v.reason


@pytest.mark.slow
@pytest.mark.solver
class TestRandomCrossCheck:
    """Random simple flat formulas against the bounded oracle."""

    @pytest.mark.parametrize('seed', range(200))
    def test_against_oracle(self, solver_cfg, seed):
        phi = simple_flat(seed)
        v = decide_simple(phi, solver_cfg)
        assert not v.is_unknown
        if v.certificate is not None:
            assert v.certificate.support <= max_support(v.certificate.cards)
        check = crosscheck(phi, v, Bounds(n_max=3, bound=2))
        assert not check.contradiction, str(check)

    @pytest.mark.parametrize('seed', range(10))
    def test_modes_agree(self, solver_cfg, seed):
        phi = simple_flat(100 + seed, arrays=('a',), max_cards=1)
        assert decide_simple(phi, solver_cfg, Mode.GUARDED).status is \
            decide_simple(phi, solver_cfg, Mode.STRICT).status
