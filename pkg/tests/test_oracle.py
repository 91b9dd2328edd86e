import pytest

from arca.errors import ResourceLimitError
from arca.formula import N, Lt, Num
from arca.oracle import Bounds, candidates, crosscheck, find_model, search_space
from arca.semantics import FiniteModel, eval_finite
from arca.verdict import Verdict

from generators import read_formula


class TestBounds:

    def test_defaults(self):
        b = Bounds()
        assert b.qbound == 2
        assert list(b.qrange()) == [-2, -1, 0, 1, 2, 3]

    def test_quantifier_bound(self):
        b = Bounds(n_max=1, bound=1, quantifier_bound=4)
        assert b.qbound == 4
        assert list(b.qrange()) == list(range(-4, 5))

    def test_negative(self):
        with pytest.raises(ValueError):
            Bounds(n_max=-1)


class TestSearch:
    """Enumeration of candidate models."""

    def test_search_space(self):
        symbols, _ = read_formula("(declare-var y)(declare-array a)(assert (< y N))")
        # 5 values for y, arrays of length 0..2 with 5 values per entry
        assert search_space(symbols, Bounds(n_max=2, bound=2)) == 5 * (1 + 5 + 25)

    def test_candidates_by_n(self):
        symbols, _ = read_formula("(declare-array a)(assert (< 0 N))")
        models = list(candidates(symbols, Bounds(n_max=2, bound=1)))
        assert len(models) == search_space(symbols, Bounds(n_max=2, bound=1))
        assert [m.n for m in models] == sorted(m.n for m in models)
        assert models[0] == FiniteModel(0, arrays={'a': ()})
        assert models[1].arrays['a'] == (-1,)

    def test_write_formula(self, write_formula):
        model = find_model(write_formula)
        assert model is not None
        assert model.n == 1
        assert eval_finite(write_formula, model)

    def test_write_unsat(self, benchmarks):
        _, phi = read_formula((benchmarks / 'write_unsat.arca').read_text())
        assert find_model(phi, Bounds(n_max=2, bound=1)) is None

    def test_write_frame(self, benchmarks):
        """No small model changes a position other than y."""
        _, phi = read_formula((benchmarks / 'write_frame.arca').read_text())
        assert find_model(phi, Bounds(n_max=2, bound=1)) is None

    def test_cap(self, write_formula):
        with pytest.raises(ResourceLimitError, match='exceeds the cap'):
            find_model(write_formula, Bounds(n_max=3, bound=2), cap=100)

    def test_extra_symbols(self):
        """Symbols declared but unused still get values."""
        symbols, phi = read_formula("(declare-var y)(declare-var unused)(assert (< y N))")
        model = find_model(phi, Bounds(n_max=1, bound=1), symbols)
        assert set(model.vars) == {'y', 'unused'}


class TestCrossCheck:
    """Verdicts compared with the bounded search."""

    def test_certificate_model_holds(self):
        phi = Lt(Num(0), N)
        check = crosscheck(phi, Verdict.sat(model=FiniteModel(2)))
        assert not check.contradiction
        assert check.outcome == 'certificate-sat'

    def test_certificate_model_fails(self):
        phi = Lt(Num(0), N)
        check = crosscheck(phi, Verdict.sat(model=FiniteModel(0)))
        assert check.contradiction
        assert str(check) == 'CONTRADICTION certificate-model-fails'

    def test_wrong_unsat(self):
        phi = Lt(Num(0), N)
        check = crosscheck(phi, Verdict.unsat())
        assert check.contradiction
        assert check.outcome == 'oracle-sat/solver-unsat'
        assert check.model.n == 1

    def test_agreeing_unsat(self):
        assert crosscheck(Lt(N, Num(0)), Verdict.unsat()).outcome == 'oracle-none/solver-unsat'

    def test_sat_without_model(self):
        """A sat verdict without a model is only compared with the search."""
        check = crosscheck(Lt(N, Num(0)), Verdict.sat(values={'N': 5}))
        assert not check.contradiction
        assert check.outcome == 'oracle-none/solver-sat'

    def test_unknown(self):
        check = crosscheck(Lt(Num(0), N), Verdict.unknown('timeout'))
        assert not check.contradiction
        assert check.outcome == 'oracle-sat/solver-unknown'
