"""
Command-line interface.

Exit codes: sat 10 / unsat 20 / unknown 2; bmc and ic 0 when safe or
confirmed, 10 on a counterexample or refutation, 2 when unknown; 1 on any
error, including bad flags.
"""

import argparse
import json
import logging
import shlex
import sys
import time
from functools import partial
from pathlib import Path
from typing import List, Optional, Sequence

from .backend import SolverConfig
from .classify import classify
from .config import Config, get_config
from .counting import eliminate_counting
from .errors import ArcaError
from .formula import NameSupply, all_names, conj
from .general import decide_eflat
from .mcheck import bmc, invariant_check, load_system, replay, trace
from .normalize import is_simple, simple_preprocess, to_eflat
from .oracle import Bounds, find_model
from .parser import parse, script_text, to_text
from .simple import Mode, decide_simple
from .stats import Reporter, StageTimer
from .verdict import Verdict

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNKNOWN = 2
EXIT_SAT = 10
EXIT_UNSAT = 20

_SAT_CODES = {'sat': EXIT_SAT, 'unsat': EXIT_UNSAT, 'unknown': EXIT_UNKNOWN}


class ArgumentParser(argparse.ArgumentParser):
    """argparse with exit code 1 on usage errors."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='arca', description='Presburger arithmetic with arrays and counting')
    parser.add_argument('--solver', help='SMT solver executable (default: ARCA_SOLVER)')
    parser.add_argument('--solver-arg', action='append', dest='solver_args', metavar='ARG',
                        help='argument passed to the solver (repeatable)')
    parser.add_argument('--timeout-ms', type=_positive, help='solver timeout per query')
    parser.add_argument('--workers', type=_positive, help='parallel disjuncts/obligations')
    parser.add_argument('--stats', action='store_true', help='print per-stage timers')
    parser.add_argument('--json', action='store_true', help='json-lines output')
    parser.add_argument('--log-level', help='logging level (default: ARCA_LOG_LEVEL)')
    sub = parser.add_subparsers(dest='command', metavar='command', parser_class=ArgumentParser)
    sub.required = True

    for name, text in (('parse', 'print the canonical form of a formula file'),
                       ('classify', 'print the formula class'),
                       ('eliminate', 'eliminate counting from a constraint formula'),
                       ('normalize', 'print the E-flat form (and reduced forms when simple)')):
        p = sub.add_parser(name, help=text)
        p.add_argument('file')

    p = sub.add_parser('sat', help='decide satisfiability')
    p.add_argument('file')
    p.add_argument('--general', action='store_true', help='use the E-flat procedure')
    p.add_argument('--mode', choices=[m.value for m in Mode], default=Mode.GUARDED.value)
    p.add_argument('--max-sigma', type=_positive)
    p.add_argument('--cert', metavar='PATH', help='write the certificate as JSON')

    p = sub.add_parser('oracle', help='bounded model search')
    p.add_argument('file')
    p.add_argument('--n-max', type=_non_negative, default=3)
    p.add_argument('--bound', type=_non_negative, default=2)

    p = sub.add_parser('bmc', help='bounded model checking of a system file')
    p.add_argument('file')
    p.add_argument('--depth', type=_non_negative, default=4)

    p = sub.add_parser('ic', help='invariant checking of a system file')
    p.add_argument('file')
    p.add_argument('--allow-missing-unsafe', action='store_true',
                   help='accept a system without an unsafe condition (safety is skipped)')
    return parser


def solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        executable=args.solver or Config.SOLVER,
        args=tuple(args.solver_args) if args.solver_args else tuple(shlex.split(Config.SOLVER_ARGS)),
        timeout_ms=args.timeout_ms or Config.TIMEOUT_MS,
        logic=Config.LOGIC,
    )


def _read_formula(path: str, timer: StageTimer):
    with timer.stage('parse'):
        symbols, formulas = parse(Path(path).read_text())
    return symbols, conj(*formulas)


def _print_verdict(reporter: Reporter, stage: str, verdict: Verdict, started: float) -> None:
    reporter.record(stage, str(verdict.status), (time.perf_counter() - started) * 1000.0, text=str(verdict))
    if verdict.is_sat and not reporter.json_lines:
        if verdict.model is not None:
            reporter.note(verdict.model.describe())
        elif verdict.values:
            reporter.note('\n'.join(f"{k} = {v}" for k, v in sorted(verdict.values.items())))


def cmd_parse(args, reporter: Reporter, timer: StageTimer) -> int:
    with timer.stage('parse'):
        symbols, formulas = parse(Path(args.file).read_text())
    reporter.note(script_text(formulas, symbols))
    return EXIT_OK


def cmd_classify(args, reporter: Reporter, timer: StageTimer) -> int:
    started = time.perf_counter()
    _, phi = _read_formula(args.file, timer)
    reporter.record('classify', str(classify(phi)), (time.perf_counter() - started) * 1000.0)
    return EXIT_OK


def cmd_eliminate(args, reporter: Reporter, timer: StageTimer) -> int:
    _, phi = _read_formula(args.file, timer)
    with timer.stage('eliminate'):
        out = eliminate_counting(phi)
    reporter.note(to_text(out))
    return EXIT_OK


def cmd_normalize(args, reporter: Reporter, timer: StageTimer) -> int:
    _, phi = _read_formula(args.file, timer)
    supply = NameSupply(all_names(phi))
    with timer.stage('normalize'):
        e = to_eflat(phi, supply)
        reduced = simple_preprocess(e, supply) if is_simple(e) else []
    reporter.note(to_text(e.formula()))
    for i, r in enumerate(reduced):
        reporter.note(f"; reduced form {i}: {'; '.join(r.form.guesses) or 'no guesses'}")
        reporter.note(to_text(r.formula()))
    return EXIT_OK


def cmd_sat(args, reporter: Reporter, timer: StageTimer) -> int:
    cfg = solver_config(args)
    _, phi = _read_formula(args.file, timer)
    started = time.perf_counter()
    if args.general:
        verdict = decide_eflat(phi, cfg, workers=args.workers, timer=timer)
    else:
        verdict = decide_simple(phi, cfg, Mode(args.mode), args.max_sigma, args.workers, timer=timer)
    _print_verdict(reporter, 'sat', verdict, started)
    if args.cert and verdict.is_sat:
        payload = verdict.certificate.to_json() if verdict.certificate is not None \
            else {'values': dict(sorted(verdict.values.items()))}
        Path(args.cert).write_text(json.dumps(payload, indent=2, sort_keys=True) + '\n')
        reporter.note(f"certificate: {args.cert}")
    return _SAT_CODES[str(verdict.status)]


def cmd_oracle(args, reporter: Reporter, timer: StageTimer) -> int:
    symbols, phi = _read_formula(args.file, timer)
    started = time.perf_counter()
    with timer.stage('oracle'):
        model = find_model(phi, Bounds(args.n_max, args.bound), symbols)
    elapsed = (time.perf_counter() - started) * 1000.0
    if model is None:
        reporter.record('oracle', 'none', elapsed, text='no bounded model')
        return EXIT_UNSAT
    reporter.record('oracle', 'model', elapsed, text=model.describe())
    return EXIT_SAT


def _decider(args, timer: StageTimer):
    return partial(decide_simple, cfg=solver_config(args), timer=timer)


def cmd_bmc(args, reporter: Reporter, timer: StageTimer) -> int:
    with timer.stage('parse'):
        spec = load_system(Path(args.file).read_text())
    started = time.perf_counter()
    last = [started]

    def on_verdict(depth: int, verdict: Verdict) -> None:
        now = time.perf_counter()
        reporter.record('bmc', str(verdict.status), (now - last[0]) * 1000.0, depth=depth,
                        text=f"depth {depth}: {verdict}")
        last[0] = now

    result = bmc(spec, args.depth, _decider(args, timer), args.workers or Config.WORKERS, on_verdict)
    reporter.note(str(result))
    if result.safe:
        return EXIT_OK
    d = result.counterexample_depth
    if d is None:
        return EXIT_UNKNOWN
    model = result.counterexample.model
    if model is not None:
        for state in trace(spec, d, model):
            reporter.note(state.describe())
        if not replay(spec, d, model):
            logger.error("counterexample does not replay on the unrolled formula")
    return EXIT_SAT


def cmd_ic(args, reporter: Reporter, timer: StageTimer) -> int:
    with timer.stage('parse'):
        spec = load_system(Path(args.file).read_text(), require_unsafe=not args.allow_missing_unsafe)
    started = time.perf_counter()
    result = invariant_check(spec, decider=_decider(args, timer), workers=args.workers or Config.WORKERS)
    elapsed = (time.perf_counter() - started) * 1000.0
    for name, verdict in result.items().items():
        if verdict is not None:
            reporter.record(f"ic-{name}", str(verdict.status), elapsed, text=f"{name}: {verdict}")
    reporter.note(str(result))
    if result.confirmed:
        return EXIT_OK
    return EXIT_SAT if result.refuted else EXIT_UNKNOWN


COMMANDS = {
    'parse': cmd_parse,
    'classify': cmd_classify,
    'eliminate': cmd_eliminate,
    'normalize': cmd_normalize,
    'sat': cmd_sat,
    'oracle': cmd_oracle,
    'bmc': cmd_bmc,
    'ic': cmd_ic,
}


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_ERROR
    reporter = Reporter(json_lines=args.json)
    timer = StageTimer()
    try:
        get_config().validate()
        code = COMMANDS[args.command](args, reporter, timer)
    except (ArcaError, ValueError, OSError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"arca: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    if args.stats:
        if args.json:
            for stage, ms in sorted(timer.totals().items()):
                reporter.record(stage, 'timing', ms)
        else:
            reporter.note(timer.summary())
    return code


def main(argv: Optional[List[str]] = None) -> None:
    argv = sys.argv[1:] if argv is None else argv
    level = get_config().LOG_LEVEL
    if '--log-level' in argv[:-1]:
        level = argv[argv.index('--log-level') + 1]
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    sys.exit(dispatch(argv))
