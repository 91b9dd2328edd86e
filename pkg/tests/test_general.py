import pytest

from arca.errors import FormulaClassError, ResourceLimitError
from arca.formula import Card, NameSupply, Read, contains
from arca.general import build_venn_system, decide_eflat, venn_arithmetic
from arca.normalize import to_eflat
from arca.oracle import Bounds, crosscheck
from arca.simple import decide_simple

from generators import read_formula, simple_flat

TWO_BODIES = ("(declare-array a)"
              "(assert (and (= (card x (= (select a x) 0)) 1) (<= (card x (< (select a x) 1)) 2)))")


class TestVennSystem:
    """Regions and split variables."""

    def test_regions(self):
        _, phi = read_formula(TWO_BODIES)
        e = to_eflat(phi)
        system = build_venn_system(e)
        assert len(system.regions) == 2 ** e.k
        assert system.regions[0].members == (0, 1)
        assert system.regions[-1].members == ()
        assert len(system.splits) == e.k * 2 ** (e.k - 1)
        assert len(system.fresh) == len(system.regions) + len(system.splits)

    def test_results_sum_their_splits(self):
        _, phi = read_formula(TWO_BODIES)
        e = to_eflat(phi)
        system = build_venn_system(e)
        assert system.results == tuple(c.result for c in e.cards)
        assert len(system.linear()) == len(system.regions) + e.k + len(system.splits)

    def test_arithmetic_has_no_arrays(self):
        _, phi = read_formula(TWO_BODIES)
        e = to_eflat(phi)
        supply = NameSupply(e.names())
        out = venn_arithmetic(build_venn_system(e, supply), supply)
        assert not contains(out, (Card, Read))

    def test_scalar_reads_rejected(self):
        _, phi = read_formula("(declare-array a)(declare-var y)"
                              "(assert (and (= (select a y) 1) (= (card x (= (select a x) 0)) 0)))")
        with pytest.raises(FormulaClassError):
            build_venn_system(to_eflat(phi))

    def test_card_limit(self):
        _, phi = read_formula(TWO_BODIES)
        with pytest.raises(ResourceLimitError):
            build_venn_system(to_eflat(phi), max_cards=1)


@pytest.mark.solver
class TestDecideEflat:
    """End-to-end runs of the general procedure."""

    def test_index_outside_read_sat(self, solver_cfg):
        """a(x) = N − x has a solution at every position."""
        _, phi = read_formula(
            "(declare-array a)(declare-var z)(assert (and (= (card x (= (+ (select a x) x) N)) z) (= z N)))")
        v = decide_eflat(phi, solver_cfg)
        assert v.is_sat
        assert v.values['z'] == v.values['N']
        assert v.certificate is None

    def test_impossible_body_unsat(self, solver_cfg):
        _, phi = read_formula(
            "(declare-array a)(declare-var z)"
            "(assert (and (= (card x (distinct (select a x) (select a x))) z) (< 0 z)))")
        assert decide_eflat(phi, solver_cfg).is_unsat

    def test_bounded_universal(self, solver_cfg):
        _, phi = read_formula(
            "(declare-array a)"
            "(assert (and (forall (x) (=> (and (<= 0 x) (< x N)) (= (select a x) 0)))"
            "             (< 0 (card x (= (select a x) 1)))))")
        assert decide_eflat(phi, solver_cfg).is_unsat

    def test_class_rejected(self, solver_cfg):
        _, phi = read_formula("(declare-array a)(declare-var y)(assert (= (select a (select a y)) 0))")
        with pytest.raises(FormulaClassError):
            decide_eflat(phi, solver_cfg)

    def test_missing_solver_is_unknown(self, missing_solver_cfg):
        _, phi = read_formula(TWO_BODIES)
        assert decide_eflat(phi, missing_solver_cfg).is_unknown

    @pytest.mark.slow
    def test_write_formula(self, solver_cfg, write_formula, benchmarks):
        assert decide_eflat(write_formula, solver_cfg, workers=2).is_sat
        _, unsat = read_formula((benchmarks / 'write_unsat.arca').read_text())
        assert decide_eflat(unsat, solver_cfg, workers=2).is_unsat
        _, frame = read_formula((benchmarks / 'write_frame.arca').read_text())
        assert decide_eflat(frame, solver_cfg).is_unsat


@pytest.mark.slow
@pytest.mark.solver
class TestAgreement:
    """The general procedure and the simple one agree on simple inputs."""

    @pytest.mark.parametrize('seed', range(15))
    def test_same_verdict(self, solver_cfg, seed):
        phi = simple_flat(300 + seed, arrays=('a',), max_cards=1)
        general = decide_eflat(phi, solver_cfg)
        simple = decide_simple(phi, solver_cfg)
        assert not general.is_unknown
        assert general.status is simple.status
        assert not crosscheck(phi, general, Bounds(3, 1)).contradiction
