"""
SMT-LIB2 boundary.

Arithmetic formulas are emitted as SMT-LIB2 scripts and decided by an
external solver process, either in batch (`run_solver`) or through an
incremental session (`open_session`). When the configured executable is the
bare name `z3`, is not on PATH and the z3 Python bindings are importable,
the same text is evaluated in-process instead.
"""

import logging
import queue
import re
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import ArcaSyntaxError, ConfigError, EmissionError
from .formula import (
    And, Card, Cong, Eq, Exists, Lt, Mul, Neg, Not, Num, Param, Read, Sum, TRUE, Var,
    contains, free_symbols,
)
from .parser import Atom, SList, read_sexprs

logger = logging.getLogger(__name__)

_SIMPLE = re.compile(r'^[A-Za-z~!@$%^&*_+=<>.?/-][A-Za-z0-9~!@$%^&*_+=<>.?/-]*$')
_SMT_RESERVED = frozenset({
    'and', 'or', 'not', 'xor', '=>', 'ite', 'exists', 'forall', 'let', 'match', 'true', 'false',
    'mod', 'div', 'abs', 'distinct', 'Int', 'Bool', 'Real', 'par', 'as', '_', '!', 'NUMERAL',
    'DECIMAL', 'STRING', 'BINARY', 'HEXADECIMAL', 'to_real', 'to_int', 'is_int',
})


class SolverStatus(Enum):
    SAT = 'sat'
    UNSAT = 'unsat'
    UNKNOWN = 'unknown'
    PROCESS_ERROR = 'process-error'

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SolverConfig:
    """How to reach the SMT solver."""
    executable: str = 'z3'
    args: Tuple[str, ...] = ('-smt2', '-in')
    timeout_ms: int = 60000
    logic: Optional[str] = None

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ConfigError(f"solver timeout must be positive, got {self.timeout_ms}")


@dataclass(frozen=True)
class SolverVerdict:
    status: SolverStatus
    values: Mapping[str, int] = field(default_factory=dict)
    detail: str = ''

    @property
    def is_sat(self) -> bool:
        return self.status is SolverStatus.SAT

    @property
    def is_unsat(self) -> bool:
        return self.status is SolverStatus.UNSAT


# -- emission ----------------------------------------------------------------

def quote_symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _SMT_RESERVED:
        return name
    return f"|{name}|"


def _num(value: int) -> str:
    return str(value) if value >= 0 else f"(- {-value})"


def smt_term(t) -> str:
    if isinstance(t, Num):
        return _num(t.value)
    if isinstance(t, (Var, Param)):
        return quote_symbol(t.name)
    if isinstance(t, Sum):
        if not t.args:
            return '0'
        if len(t.args) == 1:
            return smt_term(t.args[0])
        return f"(+ {' '.join(smt_term(a) for a in t.args)})"
    if isinstance(t, Neg):
        return f"(- {smt_term(t.arg)})"
    if isinstance(t, Mul):
        return f"(* {_num(t.coeff)} {smt_term(t.arg)})"
    if isinstance(t, (Read, Card)):
        raise EmissionError(f"cannot emit {type(t).__name__.lower()} term {t}")
    raise TypeError(f"not a term: {t!r}")


def smt_formula(f) -> str:
    if isinstance(f, Lt):
        return f"(< {smt_term(f.left)} {smt_term(f.right)})"
    if isinstance(f, Eq):
        return f"(= {smt_term(f.left)} {smt_term(f.right)})"
    if isinstance(f, Cong):
        return f"(= (mod (- {smt_term(f.left)} {smt_term(f.right)}) {f.modulus}) 0)"
    if isinstance(f, And):
        if not f.args:
            return 'true'
        if len(f.args) == 1:
            return smt_formula(f.args[0])
        return f"(and {' '.join(smt_formula(a) for a in f.args)})"
    if isinstance(f, Not):
        if f.arg == TRUE:
            return 'false'
        return f"(not {smt_formula(f.arg)})"
    if isinstance(f, Exists):
        return f"(exists (({quote_symbol(f.var)} Int)) {smt_formula(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def constants_of(formulas: Iterable, symbols=None) -> List[str]:
    names = {'N'}
    if symbols is not None:
        names |= set(symbols.params) | set(symbols.vars)
    for f in formulas:
        s = free_symbols(f)
        names |= s.vars | s.params
    return sorted(names)


def _check_emittable(phi) -> None:
    if contains(phi, Read):
        raise EmissionError("formula still contains array reads")
    if contains(phi, Card):
        raise EmissionError("formula still contains counting terms")


def emit_script(phi, symbols=None, logic: Optional[str] = None, get_values: bool = True) -> str:
    """SMT-LIB2 script deciding phi; deterministic for a fixed input."""
    _check_emittable(phi)
    names = constants_of([phi], symbols)
    if logic is None:
        logic = 'LIA' if contains(phi, Exists) else 'QF_LIA'
    lines = [f"(set-logic {logic})"]
    lines += [f"(declare-const {quote_symbol(n)} Int)" for n in names]
    lines.append("(assert (>= N 0))")
    lines.append(f"(assert {smt_formula(phi)})")
    lines.append("(check-sat)")
    if get_values:
        lines.append(f"(get-value ({' '.join(quote_symbol(n) for n in names)}))")
    return '\n'.join(lines) + '\n'


# -- output parsing ----------------------------------------------------------

def _sexpr_int(e) -> int:
    if isinstance(e, Atom):
        return int(e.text)
    if isinstance(e, SList) and len(e.items) == 2 and isinstance(e.items[0], Atom) \
            and e.items[0].text == '-':
        return -_sexpr_int(e.items[1])
    raise ValueError(f"not an integer value: {e}")


def parse_values(text: str) -> Dict[str, int]:
    """Values of a get-value response such as ((N 3) (x (- 2)))."""
    values: Dict[str, int] = {}
    for top in read_sexprs(text):
        if not isinstance(top, SList):
            continue
        for pair in top.items:
            if isinstance(pair, SList) and len(pair.items) == 2 and isinstance(pair.items[0], Atom):
                values[pair.items[0].text.strip('|')] = _sexpr_int(pair.items[1])
    return values


def parse_output(text: str) -> SolverVerdict:
    """Verdict from the output of a batch script (status line, then values)."""
    lines = text.splitlines()
    for i, raw in enumerate(lines):
        line = raw.strip()
        if line.startswith('(error'):
            return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=line)
        if line in ('sat', 'unsat', 'unknown'):
            status = SolverStatus(line)
            values: Dict[str, int] = {}
            if status is SolverStatus.SAT:
                rest = '\n'.join(lines[i + 1:])
                try:
                    values = parse_values(rest)
                except (ArcaSyntaxError, ValueError) as e:
                    return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=f"unreadable model: {e}")
            detail = '' if status is not SolverStatus.UNKNOWN else 'solver returned unknown'
            return SolverVerdict(status, values, detail)
    return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=f"no verdict in solver output: {text.strip()[:200]!r}")


# -- process driver ----------------------------------------------------------

def _in_process_available() -> bool:
    try:
        import z3  # noqa: F401
    except ImportError:
        return False
    return True


def _resolve(cfg: SolverConfig) -> Tuple[Optional[str], bool]:
    """(path to the executable, use in-process z3 instead)."""
    path = shutil.which(cfg.executable)
    if path is not None:
        return path, False
    if cfg.executable == 'z3' and _in_process_available():
        return None, True
    return None, False


def _eval_in_process(script: str, timeout_ms: int, ctx=None) -> str:
    import z3
    ctx = ctx or z3.Context()
    try:
        return z3.Z3_eval_smtlib2_string(ctx.ref(), f"(set-option :timeout {timeout_ms})\n{script}")
    except z3.Z3Exception as e:
        return f"(error \"{e}\")"


def run_solver(script: str, cfg: SolverConfig) -> SolverVerdict:
    """Run one script to completion."""
    path, in_process = _resolve(cfg)
    started = time.perf_counter()
    if in_process:
        logger.warning("z3 executable not found, evaluating in-process")
        verdict = parse_output(_eval_in_process(script, cfg.timeout_ms))
        if verdict.status is SolverStatus.UNKNOWN:
            verdict = SolverVerdict(SolverStatus.UNKNOWN, detail='timeout or incomplete')
        return verdict
    if path is None:
        logger.error(f"solver executable not found: {cfg.executable}")
        return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=f"solver executable not found: {cfg.executable}")
    cmd = [path, *cfg.args]
    logger.debug(f"running {' '.join(cmd)}")
    try:
        proc = subprocess.run(cmd, input=script, capture_output=True, text=True,
                              timeout=cfg.timeout_ms / 1000.0)
    except subprocess.TimeoutExpired:
        logger.info(f"solver timed out after {cfg.timeout_ms} ms")
        return SolverVerdict(SolverStatus.UNKNOWN, detail='timeout')
    except OSError as e:
        logger.error(f"failed to start solver: {e}")
        return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=str(e))
    verdict = parse_output(proc.stdout)
    if verdict.status is SolverStatus.PROCESS_ERROR and proc.returncode != 0:
        detail = f"exit code {proc.returncode}: {(proc.stderr or proc.stdout).strip()[:200]}"
        logger.error(f"solver failed: {detail}")
        return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=detail)
    logger.debug(f"solver answered {verdict.status} in {(time.perf_counter() - started) * 1000:.1f} ms")
    return verdict


def decide(phi, cfg: SolverConfig, symbols=None) -> SolverVerdict:
    """Emit phi and run it in batch."""
    return run_solver(emit_script(phi, symbols, cfg.logic), cfg)


def solver_responds(cfg: SolverConfig) -> bool:
    """True if the configured solver answers a trivial query."""
    verdict = decide(Eq(Param('N'), Num(0)), cfg)
    if verdict.is_sat:
        logger.info(f"solver {cfg.executable} is reachable")
        return True
    logger.error(f"solver {cfg.executable} is not usable: {verdict.detail or verdict.status}")
    return False


# -- incremental sessions ----------------------------------------------------

class _SolverFailure(Exception):
    pass


class _ProcessChannel:
    """A solver process answering one response per command (print-success mode)."""

    def __init__(self, path: str, cfg: SolverConfig):
        self._timeout = cfg.timeout_ms / 1000.0
        self._proc = subprocess.Popen([path, *cfg.args], stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                                      stderr=subprocess.DEVNULL, text=True, bufsize=1)
        self._lines: 'queue.Queue[Optional[str]]' = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self.send('(set-option :print-success true)', 'ack')

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line.rstrip('\n'))
        self._lines.put(None)

    def _readline(self) -> str:
        try:
            line = self._lines.get(timeout=self._timeout)
        except queue.Empty:
            self.close()
            raise _SolverFailure('timeout') from None
        if line is None:
            raise _SolverFailure(f"solver exited with code {self._proc.poll()}")
        return line

    def send(self, command: str, expect: str) -> str:
        try:
            self._proc.stdin.write(command + '\n')
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as e:
            raise _SolverFailure(f"solver process is gone: {e}") from None
        line = self._readline()
        while not line.strip():
            line = self._readline()
        if line.startswith('(error'):
            raise _SolverFailure(line)
        if expect != 'sexpr':
            return line.strip()
        text = line
        while text.count('(') > text.count(')'):
            text += '\n' + self._readline()
        return text

    def close(self) -> None:
        if self._proc.poll() is None:
            self._proc.kill()
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass


class _InProcessChannel:
    def __init__(self, cfg: SolverConfig):
        import z3
        self._z3 = z3
        self._ctx = z3.Context()
        self.send(f"(set-option :timeout {cfg.timeout_ms})", 'ack')

    def send(self, command: str, expect: str) -> str:
        try:
            out = self._z3.Z3_eval_smtlib2_string(self._ctx.ref(), command).strip()
        except self._z3.Z3Exception as e:
            raise _SolverFailure(str(e)) from None
        if out.startswith('(error'):
            raise _SolverFailure(out)
        return out

    def close(self) -> None:
        self._ctx = None


class Session:
    """Incremental solver session; single owner, not thread-safe."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.failure: Optional[str] = None
        self._declared: List[str] = []
        self._depth = 0
        path, in_process = _resolve(cfg)
        if in_process:
            logger.warning("z3 executable not found, using an in-process session")
            self._channel = _InProcessChannel(cfg)
        elif path is None:
            self._channel = None
            self.failure = f"solver executable not found: {cfg.executable}"
            return
        else:
            try:
                self._channel = _ProcessChannel(path, cfg)
            except (OSError, _SolverFailure) as e:
                self._channel = None
                self.failure = f"failed to start solver: {e}"
                return
        self._send('(set-option :global-declarations true)')
        if cfg.logic:
            self._send(f"(set-logic {cfg.logic})")
        self.declare(['N'])
        self._send('(assert (>= N 0))')

    @property
    def alive(self) -> bool:
        return self.failure is None

    @property
    def depth(self) -> int:
        return self._depth

    def _send(self, command: str, expect: str = 'ack') -> Optional[str]:
        if self.failure is not None:
            return None
        try:
            return self._channel.send(command, expect)
        except _SolverFailure as e:
            self.failure = str(e)
            logger.error(f"solver session failed: {e}")
            self.close()
            return None

    def declare(self, names: Iterable[str]) -> None:
        for n in sorted(set(names) - set(self._declared)):
            self._declared.append(n)
            self._send(f"(declare-const {quote_symbol(n)} Int)")

    def add(self, phi) -> bool:
        _check_emittable(phi)
        s = free_symbols(phi)
        self.declare(s.vars | s.params)
        return self._send(f"(assert {smt_formula(phi)})") is not None

    def push(self) -> bool:
        self._depth += 1
        return self._send('(push 1)') is not None

    def pop(self) -> bool:
        if self._depth == 0:
            raise ValueError("pop without matching push")
        self._depth -= 1
        return self._send('(pop 1)') is not None

    def check(self, values: Optional[Sequence[str]] = None) -> SolverVerdict:
        if self.failure is not None:
            return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=self.failure)
        answer = self._send('(check-sat)', 'status')
        if answer is None:
            if self.failure == 'timeout':
                return SolverVerdict(SolverStatus.UNKNOWN, detail='timeout')
            return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=self.failure or '')
        if answer not in ('sat', 'unsat', 'unknown'):
            return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=f"unexpected answer {answer!r}")
        status = SolverStatus(answer)
        if status is not SolverStatus.SAT:
            return SolverVerdict(status, detail='solver returned unknown' if answer == 'unknown' else '')
        names = list(values) if values is not None else list(self._declared)
        if not names:
            return SolverVerdict(status)
        self.declare(names)
        text = self._send(f"(get-value ({' '.join(quote_symbol(n) for n in names)}))", 'sexpr')
        if text is None:
            return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=self.failure or '')
        try:
            return SolverVerdict(status, parse_values(text))
        except (ArcaSyntaxError, ValueError) as e:
            return SolverVerdict(SolverStatus.PROCESS_ERROR, detail=f"unreadable model: {e}")

    def close(self) -> None:
        if self._channel is not None:
            self._channel.close()
            self._channel = None
        if self.failure is None:
            self.failure = 'session closed'

    def __enter__(self) -> 'Session':
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def open_session(cfg: SolverConfig) -> Session:
    return Session(cfg)


def session_assert(session: Session, phi) -> bool:
    return session.add(phi)


def session_push(session: Session) -> bool:
    return session.push()


def session_pop(session: Session) -> bool:
    return session.pop()


def session_check(session: Session, values: Optional[Sequence[str]] = None) -> SolverVerdict:
    return session.check(values)
