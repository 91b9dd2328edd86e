import random

import pytest

from arca.classify import FormulaClass, classify, shape_class, within
from arca.errors import ArcaSyntaxError, EvaluationError, SymbolError
from arca.formula import (
    FALSE, N, TRUE, And, Card, Eq, Exists, Lt, Not, Num, Read, Sum, Var,
    NameSupply, free_symbols, substitute,
)
from arca.parser import parse, script_text, to_text
from arca.semantics import FiniteModel, eval_finite, eval_term

from generators import FormulaGen, read_formula


class TestParser:
    """Surface syntax and its desugaring."""

    def test_declarations(self):
        """Declared names land in the right kind; N is implicit."""
        symbols, formulas = parse("(declare-param p)(declare-var y)(declare-array a)(assert (< p y))")
        assert symbols.params == {'N', 'p'}
        assert symbols.vars == {'y'}
        assert symbols.arrays == {'a'}
        assert len(formulas) == 1

    def test_implication_desugars(self):
        """=> becomes not(and(a, not b))."""
        _, f = read_formula("(declare-var y)(assert (=> (< y 0) (= y 1)))")
        assert f == Not(And((Lt(Var('y'), Num(0)), Not(Eq(Var('y'), Num(1))))))

    def test_forall_desugars(self):
        """forall is the negated existential of the negated body."""
        _, f = read_formula("(assert (forall (x) (< x N)))")
        assert f == Not(Exists('x', Not(Lt(Var('x'), N))))

    def test_le_desugars(self):
        _, f = read_formula("(declare-var y)(assert (<= y N))")
        assert f == Not(Lt(N, Var('y')))

    def test_card_binds_its_variable(self):
        """The counting variable is bound; free occurrences elsewhere stay free."""
        _, f = read_formula("(declare-array a)(assert (= (card x (= (select a x) 0)) N))")
        assert f == Eq(Card('x', Eq(Read('a', Var('x')), Num(0))), N)
        assert free_symbols(f).vars == frozenset()

    def test_undeclared_symbol(self):
        with pytest.raises(SymbolError, match="undeclared symbol 'q'"):
            parse("(assert (< q 1))")

    def test_redeclaring_n(self):
        """N is a reserved parameter."""
        with pytest.raises(SymbolError):
            parse("(declare-param N)")

    def test_bang_rejected_in_user_names(self):
        with pytest.raises(SymbolError, match="reserved for generated names"):
            parse("(declare-var y!1)")

    def test_unbalanced_parenthesis_position(self):
        """Syntax errors carry a 1-based line and column."""
        with pytest.raises(ArcaSyntaxError) as info:
            parse("(assert\n  (< N 1)")
        assert info.value.line == 1
        assert info.value.column == 1

    def test_non_constant_coefficient(self):
        with pytest.raises(ArcaSyntaxError, match="non-constant coefficient"):
            parse("(declare-var y)(assert (= (* y y) 1))")

    def test_array_used_as_term(self):
        with pytest.raises(ArcaSyntaxError, match="used as a term"):
            parse("(declare-array a)(assert (= a 1))")

    def test_bad_modulus(self):
        with pytest.raises(ArcaSyntaxError, match="modulus"):
            parse("(declare-var y)(assert (mod-eq 0 y 1))")

    def test_shadowed_binder_is_renamed(self):
        """A binder reusing a declared name is renamed apart."""
        _, f = read_formula("(declare-var y)(assert (and (= y 1) (exists (y) (< y 0))))")
        inner = f.args[1]
        assert isinstance(inner, Exists)
        assert inner.var != 'y'
        assert free_symbols(f).vars == {'y'}

    @pytest.mark.parametrize('text', ["(declare-var y)(assert (= (+ y) 1))", "(assert (= (+) 0))"])
    def test_sum_arity(self, text):
        """'+' needs two or more summands."""
        with pytest.raises(ArcaSyntaxError, match="at least two"):
            parse(text)


class TestPrinting:
    """Canonical text and parse/print stability."""

    @pytest.mark.parametrize('text', [
        "(declare-var y)(assert (or (< y 0) (= y 2)))",
        "(declare-array a)(declare-var y)(assert (=> (= (select a y) 0) (<= (card x (= (select a x) 1)) (- N 1))))",
        "(assert (forall (x) (exists (w) (mod-eq 3 (+ x (* 2 w)) 1))))",
        "(declare-var y)(assert (and true (distinct y 3) (not false)))",
    ])
    def test_reparse_is_identity(self, text):
        """Printing then parsing again gives the same formulas."""
        symbols, formulas = parse(text)
        again_symbols, again = parse(script_text(formulas, symbols))
        assert again == formulas
        assert again_symbols == symbols

    def test_derived_forms_are_printed(self):
        _, f = read_formula("(declare-var y)(assert (or (<= y 0) (distinct y 2)))")
        assert to_text(f) == "(or (<= y 0) (distinct y 2))"

    def test_true_and_false(self):
        assert to_text(TRUE) == 'true'
        assert to_text(FALSE) == 'false'

    @pytest.mark.parametrize('seed', range(50))
    def test_random_reparse(self, seed):
        """Random formulas over the whole syntax survive printing and parsing."""
        f = FormulaGen(random.Random(seed)).formula(4)
        _, again = parse(script_text([f]))
        assert again == [f]


class TestSubstitution:
    """Capture-avoiding substitution."""

    def test_free_occurrence(self):
        f = Lt(Var('y'), N)
        assert substitute(f, 'y', Num(2)) == Lt(Num(2), N)

    def test_bound_occurrence_untouched(self):
        f = Exists('y', Lt(Var('y'), N))
        assert substitute(f, 'y', Num(2)) == f

    def test_no_capture(self):
        """Substituting x into ∃x' renames the binder."""
        f = Exists('x', Lt(Var('x'), Var('y')))
        out = substitute(f, 'y', Var('x'))
        assert isinstance(out, Exists)
        assert out.var != 'x'
        assert free_symbols(out).vars == {'x'}

    def test_fresh_names(self):
        supply = NameSupply({'z!1'})
        assert supply.fresh('z') == 'z!2'
        assert supply.fresh('z') == 'z!3'
        assert 'z!3' in supply

    @pytest.mark.parametrize('seed', range(50))
    def test_random_substitution_agrees_with_evaluation(self, seed):
        """phi[u/x] holds in M exactly when phi holds with x set to the value of u.

        Binders are drawn from y and w, so u's free names get captured unless renamed.
        """
        rng = random.Random(seed)
        phi = FormulaGen(rng, vars_=('x', 'y', 'z'), reuse=('y', 'w')).formula(3, quantifiers=False)
        u = FormulaGen(rng, vars_=('y', 'w')).term(2)
        n = rng.randint(0, 3)
        model = FiniteModel(
            n, params={'p': rng.randint(-2, 2)},
            vars={v: rng.randint(-2, 3) for v in ('x', 'y', 'z', 'w')},
            arrays={a: tuple(rng.randint(-1, 2) for _ in range(n)) for a in ('a', 'b')})
        shifted = FiniteModel(n, model.params, {**model.vars, 'x': eval_term(u, model)}, model.arrays)
        assert eval_finite(substitute(phi, 'x', u), model) == eval_finite(phi, shifted)


class TestClassify:
    """Formula classes."""

    def test_arithmetic(self):
        _, f = read_formula("(declare-var y)(assert (< y N))")
        assert classify(f) is FormulaClass.ARITHMETIC

    def test_basic(self):
        _, f = read_formula("(declare-array a)(declare-var y)(assert (= (select a y) 0))")
        assert classify(f) is FormulaClass.BASIC

    def test_write_formula_is_simple_flat(self, write_formula):
        assert classify(write_formula) is FormulaClass.SIMPLE_FLAT

    def test_index_outside_read_is_flat(self):
        """The counting variable used outside a read leaves the simple class."""
        _, f = read_formula("(declare-array a)(declare-var z)(assert (= (card x (= (+ (select a x) x) N)) z))")
        assert classify(f) is FormulaClass.FLAT

    def test_nested_read_is_general(self):
        _, f = read_formula("(declare-array a)(declare-var y)(assert (= (select a (select a y)) 0))")
        assert classify(f) is FormulaClass.GENERAL

    def test_nested_count_without_arrays_is_constraint(self):
        _, f = read_formula("(declare-var y)(assert (= y (card x (= (card w (< w x)) x))))")
        assert classify(f) is FormulaClass.CONSTRAINT

    def test_count_without_arrays_is_constraint(self):
        """Any read-free formula with counting is a Constraint formula."""
        _, f = read_formula("(declare-var y)(assert (= (card x (< x N)) N))")
        assert classify(f) is FormulaClass.CONSTRAINT
        assert shape_class(f) is FormulaClass.FLAT
        _, f = read_formula("(declare-var y)(assert (= (card x (mod-eq 2 x 0)) y))")
        assert classify(f) is FormulaClass.CONSTRAINT

    def test_parameter_body_shape(self):
        """A body over N and parameters only still fits the simple shape."""
        _, f = read_formula("(declare-var y)(assert (= (card x (< y 3)) N))")
        assert classify(f) is FormulaClass.CONSTRAINT
        assert shape_class(f) is FormulaClass.SIMPLE_FLAT

    def test_eflat_shape(self):
        """A read at an existentially bound count is E-flat, not flat."""
        _, f = read_formula(
            "(declare-array a)"
            "(assert (exists (z) (and (= (select a z) 0) (= (card x (= (select a x) 0)) z))))")
        assert classify(f) is FormulaClass.SIMPLE_EFLAT

    def test_containment(self):
        assert within(FormulaClass.BASIC, FormulaClass.SIMPLE_FLAT)
        assert within(FormulaClass.SIMPLE_FLAT, FormulaClass.EFLAT)
        assert not within(FormulaClass.FLAT, FormulaClass.SIMPLE_EFLAT)
        assert not within(FormulaClass.GENERAL, FormulaClass.EFLAT)
        assert within(FormulaClass.ARITHMETIC, FormulaClass.CONSTRAINT)


class TestEvaluation:
    """Finite evaluation."""

    def test_count_ranges_over_indices(self):
        """Counting looks only at [0, N)."""
        f = Card('x', Eq(Read('a', Var('x')), Num(0)))
        m = FiniteModel(3, arrays={'a': (0, 1, 0)})
        assert eval_term(f, m) == 2

    def test_reads_outside_are_zero(self):
        m = FiniteModel(2, vars={'y': 5}, arrays={'a': (7, 7)})
        assert eval_term(Read('a', Var('y')), m) == 0
        assert eval_term(Read('a', Num(1)), m) == 7

    def test_count_is_within_range(self):
        for n in range(0, 4):
            m = FiniteModel(n)
            assert eval_term(Card('x', TRUE), m) == n
            assert eval_term(Card('x', FALSE), m) == 0

    def test_quantifier_range(self):
        """Quantifiers enumerate the given range only."""
        f = Exists('w', Eq(Sum((Var('w'), Var('w'))), Num(8)))
        m = FiniteModel(0)
        assert not eval_finite(f, m, bound=2)
        assert eval_finite(f, m, bound=4)
        assert eval_finite(f, m, qrange=[4])

    def test_congruence(self):
        _, f = read_formula("(declare-var y)(assert (mod-eq 3 y 1))")
        assert eval_finite(f, FiniteModel(0, vars={'y': -2}))
        assert not eval_finite(f, FiniteModel(0, vars={'y': 2}))

    def test_unvalued_symbol(self):
        with pytest.raises(EvaluationError):
            eval_finite(Lt(Var('y'), N), FiniteModel(1))

    def test_wrong_array_length(self):
        with pytest.raises(EvaluationError):
            FiniteModel(2, arrays={'a': (0,)})

    def test_write_formula_model(self, write_formula):
        """b = write(a, y, z) is a model of the write encoding."""
        m = FiniteModel(3, vars={'y': 1, 'z': 4}, arrays={'a': (0, 0, 0), 'b': (0, 4, 0)})
        assert eval_finite(write_formula, m)
        bad = FiniteModel(3, vars={'y': 1, 'z': 4}, arrays={'a': (0, 0, 0), 'b': (1, 4, 0)})
        assert not eval_finite(write_formula, bad)

    def test_permuted_model(self):
        m = FiniteModel(3, arrays={'a': (1, 2, 3)})
        assert m.permuted([2, 0, 1]).arrays['a'] == (3, 1, 2)
