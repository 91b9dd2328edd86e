import subprocess
from unittest.mock import MagicMock, patch

import pytest

from arca.backend import (
    SolverConfig, SolverStatus, decide, emit_script, open_session, parse_output, parse_values,
    quote_symbol, run_solver,
)
from arca.errors import ConfigError, EmissionError
from arca.formula import N, Card, Cong, Eq, Exists, Lt, Num, Read, Var, conj, plus, times

from generators import read_formula


@pytest.fixture
def fake_z3():
    """A solver executable that resolves on PATH, with subprocess.run mocked."""
    with patch('arca.backend.shutil.which', return_value='/usr/bin/z3'), \
            patch('arca.backend.subprocess.run') as run:
        yield run


def completed(stdout: str, returncode: int = 0, stderr: str = '') -> MagicMock:
    return MagicMock(stdout=stdout, stderr=stderr, returncode=returncode)


class TestEmission:
    """SMT-LIB2 text."""

    def test_script_shape(self):
        script = emit_script(Lt(Var('y'), N))
        lines = script.splitlines()
        assert lines[0] == '(set-logic QF_LIA)'
        assert '(declare-const N Int)' in lines
        assert '(declare-const y Int)' in lines
        assert '(assert (>= N 0))' in lines
        assert '(assert (< y N))' in lines
        assert lines[-2] == '(check-sat)'
        assert lines[-1] == '(get-value (N y))'

    def test_deterministic(self):
        phi = conj(Lt(Var('b'), Var('a')), Cong(3, Var('c'), Num(1)))
        assert emit_script(phi) == emit_script(phi)

    def test_quantified_logic(self):
        script = emit_script(Exists('w', Eq(times(2, Var('w')), Var('y'))))
        assert script.startswith('(set-logic LIA)')
        assert '(exists ((w Int)) (= (* 2 w) y))' in script

    def test_configured_logic(self):
        assert emit_script(Lt(Var('y'), N), logic='ALL').startswith('(set-logic ALL)')

    def test_congruence_and_negative_numbers(self):
        script = emit_script(Cong(3, plus(Var('y'), Num(-2)), Num(1)), get_values=False)
        assert '(= (mod (- (+ y (- 2)) 1) 3) 0)' in script
        assert 'get-value' not in script

    def test_reads_rejected(self):
        with pytest.raises(EmissionError):
            emit_script(Eq(Read('a', Var('y')), Num(0)))

    def test_counts_rejected(self):
        with pytest.raises(EmissionError):
            emit_script(Eq(Card('x', Lt(Var('x'), N)), Num(0)))

    @pytest.mark.parametrize('name, quoted', [
        ('y', 'y'),
        ('z!3', 'z!3'),
        ('pc__2', 'pc__2'),
        ('and', '|and|'),
        ("s'", "|s'|"),
    ])
    def test_quote_symbol(self, name, quoted):
        assert quote_symbol(name) == quoted


class TestOutputParsing:
    """Verdicts from solver output."""

    def test_sat_with_values(self):
        v = parse_output("sat\n((N 3)\n (y (- 2)))\n")
        assert v.status is SolverStatus.SAT
        assert v.values == {'N': 3, 'y': -2}

    def test_quoted_names(self):
        assert parse_values("((|s'| 1) (N 0))") == {"s'": 1, 'N': 0}

    def test_unsat(self):
        v = parse_output("unsat\n(error \"model is not available\")\n")
        assert v.status is SolverStatus.UNSAT

    def test_unknown(self):
        v = parse_output("unknown\n")
        assert v.status is SolverStatus.UNKNOWN
        assert v.detail

    def test_error_line(self):
        v = parse_output("(error \"line 1 column 2: unknown constant q\")\n")
        assert v.status is SolverStatus.PROCESS_ERROR

    def test_no_verdict(self):
        v = parse_output("segmentation fault\n")
        assert v.status is SolverStatus.PROCESS_ERROR
        assert 'no verdict' in v.detail


class TestRunSolver:
    """Process driver with subprocess mocked."""

    def test_missing_executable(self, missing_solver_cfg):
        v = run_solver(emit_script(Lt(Var('y'), N)), missing_solver_cfg)
        assert v.status is SolverStatus.PROCESS_ERROR
        assert 'not found' in v.detail

    def test_sat(self, fake_z3):
        fake_z3.return_value = completed("sat\n((N 0) (y 0))\n")
        script = emit_script(Lt(Var('y'), Num(1)))
        v = run_solver(script, SolverConfig(timeout_ms=2000))
        assert v.is_sat
        assert v.values == {'N': 0, 'y': 0}
        args, kwargs = fake_z3.call_args
        assert args[0] == ['/usr/bin/z3', '-smt2', '-in']
        assert kwargs['input'] == script
        assert kwargs['timeout'] == 2.0

    def test_timeout(self, fake_z3):
        fake_z3.side_effect = subprocess.TimeoutExpired(cmd='z3', timeout=1)
        v = run_solver(emit_script(Lt(Var('y'), N)), SolverConfig())
        assert v.status is SolverStatus.UNKNOWN
        assert v.detail == 'timeout'

    def test_start_failure(self, fake_z3):
        fake_z3.side_effect = OSError('permission denied')
        v = run_solver(emit_script(Lt(Var('y'), N)), SolverConfig())
        assert v.status is SolverStatus.PROCESS_ERROR
        assert 'permission denied' in v.detail

    def test_crash(self, fake_z3):
        fake_z3.return_value = completed('', returncode=139, stderr='killed')
        v = run_solver(emit_script(Lt(Var('y'), N)), SolverConfig())
        assert v.status is SolverStatus.PROCESS_ERROR
        assert 'exit code 139' in v.detail

    def test_nonzero_exit_with_verdict(self, fake_z3):
        """z3 exits with 1 after an unsat get-value; the verdict still counts."""
        fake_z3.return_value = completed("unsat\n(error \"model is not available\")\n", returncode=1)
        v = run_solver(emit_script(Lt(Var('y'), N)), SolverConfig())
        assert v.is_unsat

    def test_bad_timeout(self):
        with pytest.raises(ConfigError):
            SolverConfig(timeout_ms=0)


class TestSessions:
    """Incremental sessions."""

    def test_missing_executable(self, missing_solver_cfg):
        with open_session(missing_solver_cfg) as session:
            assert not session.alive
            assert session.check().status is SolverStatus.PROCESS_ERROR

    def test_pop_without_push(self, missing_solver_cfg):
        with open_session(missing_solver_cfg) as session:
            with pytest.raises(ValueError):
                session.pop()

    @pytest.mark.solver
    def test_push_pop(self, solver_cfg):
        with open_session(solver_cfg) as session:
            assert session.add(Lt(Var('y'), Num(2)))
            session.push()
            session.add(Lt(Num(5), Var('y')))
            assert session.check(values=()).is_unsat
            session.pop()
            v = session.check(values=['y'])
            assert v.is_sat
            assert v.values['y'] < 2
            assert session.depth == 0

    @pytest.mark.solver
    def test_session_rejects_counts(self, solver_cfg):
        with open_session(solver_cfg) as session:
            with pytest.raises(EmissionError):
                session.add(Eq(Card('x', Lt(Var('x'), N)), Num(0)))


@pytest.mark.solver
class TestDecide:
    """Batch queries against the configured solver."""

    def test_sat_values(self, solver_cfg):
        _, phi = read_formula("(declare-var y)(assert (and (mod-eq 3 y 2) (< 0 y) (< y 4)))")
        v = decide(phi, solver_cfg)
        assert v.is_sat
        assert v.values['y'] == 2

    def test_unsat(self, solver_cfg):
        _, phi = read_formula("(declare-var y)(assert (and (< N y) (< y 0)))")
        assert decide(phi, solver_cfg).is_unsat

    def test_n_is_non_negative(self, solver_cfg):
        assert decide(Lt(N, Num(0)), solver_cfg).is_unsat
