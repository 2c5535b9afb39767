import argparse
import fnmatch
import json
import logging
import signal
import sys
import threading
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, ValidationError
from tqdm import tqdm

from cegis.loop import Solver
from cegis.types import STRATEGIES, SolverConfig, SolverResult, SolverStats, Verdict
from config import BENCH_TIMEOUT, DEFAULT_SEED, SAT_BACKEND, TIMEOUT
from formula.ast import SynthesisInstance
from formula.parser import parse_formula
from formula.skolem import skolemize
from frontends.corpus import load_corpus
from frontends.loops import encode_loop, parse_loop
from frontends.qbf import QbfFormula, negate_qbf, parse_qdimacs, qbf_instance
from lang.text import pretty_print
from utils.errors import SosatError
from utils.logger import set_level, setup_logger

# Set up logger
logger = setup_logger("cli")

EXIT_CODES = {Verdict.SAT: 10, Verdict.UNSAT: 20, Verdict.UNKNOWN: 30}
EXIT_ERROR = 1

TIME_FIELDS = ("synth_time", "verif_time", "generalize_time")


class RunReport(BaseModel):
    """What one solve prints: verdict, witnesses in program text, statistics."""

    source: str
    verdict: Verdict
    reason: Optional[str] = None
    witnesses: Dict[str, str] = {}
    stats: Dict[str, Any] = {}
    seed: int
    log_path: Optional[str] = None

    @classmethod
    def from_result(cls, source: str, result: SolverResult, config: SolverConfig) -> "RunReport":
        stats = result.stats.model_dump()
        stats["final_params"] = list(stats["final_params"])
        if config.deterministic:
            for name in TIME_FIELDS:
                stats.pop(name)
        return cls(
            source=source,
            verdict=result.verdict,
            reason=result.reason,
            witnesses={name: pretty_print(p) for name, p in sorted(result.witnesses.items())},
            stats=stats,
            seed=config.seed,
            log_path=config.log_path,
        )


class UsageError(SosatError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_ERROR)


@contextmanager
def interruptible(*events: threading.Event):
    """SIGINT sets the events instead of raising, so runs end with partial statistics."""
    if threading.current_thread() is not threading.main_thread():
        yield
        return

    def handler(signum, frame):
        logger.warning("Interrupted, stopping the current run")
        for event in events:
            event.set()

    previous = signal.signal(signal.SIGINT, handler)
    try:
        yield
    finally:
        signal.signal(signal.SIGINT, previous)


def read_input(path: str, enable_shl: bool = False,
               width: Optional[int] = None) -> Tuple[SynthesisInstance, Optional[QbfFormula]]:
    """Instance for a .sos, .loop or .qdimacs file; the QBF too when there is one."""
    file = Path(path)
    text = file.read_text(encoding="utf-8")
    label = file.stem
    suffix = file.suffix.lower()
    if suffix == ".qdimacs":
        qbf = parse_qdimacs(text)
        return qbf_instance(qbf, label), qbf
    if suffix == ".loop":
        formula = encode_loop(parse_loop(text, default_width=width))
    elif suffix == ".sos":
        formula = parse_formula(text, default_width=width)
    else:
        raise UsageError(f"Unknown input type '{file.suffix}' (expected .sos, .loop or .qdimacs)")
    return skolemize(formula, label=label, enable_shl=enable_shl), None


def strategy_list(value: str) -> List[str]:
    names = [s.strip() for s in value.split(",") if s.strip()]
    unknown = [s for s in names if s not in STRATEGIES]
    if unknown or not names:
        raise argparse.ArgumentTypeError(f"strategies must be drawn from {','.join(STRATEGIES)}")
    return names


def add_solver_flags(parser: argparse.ArgumentParser, timeout: float) -> None:
    parser.add_argument("--timeout", type=float, default=timeout, help="Seconds per solve")
    parser.add_argument("--width", type=int, default=None, help="Target (verification) width")
    parser.add_argument("--initial-width", type=int, default=None, help="First synthesis width")
    parser.add_argument("--strategies", type=strategy_list, default=list(STRATEGIES),
                        help="Comma-separated subset of explicit,symbolic,gp")
    parser.add_argument("--deterministic", action="store_true",
                        help="Fixed turn order and budgets; reproducible output")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Seed for every random choice")
    parser.add_argument("--sat-backend", default=SAT_BACKEND, help="'builtin' or the path of a DIMACS solver")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sosat", description="Second-order SAT solver by finite-state program synthesis")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    solve = sub.add_parser("solve", help="Solve one .sos, .loop or .qdimacs file")
    solve.add_argument("input", help="Formula, loop or QDIMACS file")
    add_solver_flags(solve, TIMEOUT)
    solve.add_argument("--max-length", type=int, default=None, help="Give up (UNKNOWN) beyond this length")
    solve.add_argument("--enable-shl", action="store_true", help="Allow the shl extension opcode")
    solve.add_argument("--log", default=None, help="Write the run log (JSON Lines) here")
    solve.add_argument("--dual", action="store_true", help="QBF only: race the formula against its negation")
    solve.add_argument("--dump-cnf", default=None, metavar="DIR", help="Write every synthesis CNF to DIR")

    bench = sub.add_parser("bench", help="Run the bundled benchmark corpus")
    add_solver_flags(bench, BENCH_TIMEOUT)
    bench.add_argument("--filter", default=None,
                       help="Comma-separated case ids or patterns (e.g. 'P1*,swap')")
    bench.add_argument("--include-hard", action="store_true", help="Also run the known-hard cases")
    bench.add_argument("--output", default=None, help="Also write the per-case table as CSV")
    bench.add_argument("--max-length", type=int, default=None, help="Give up (UNKNOWN) beyond this length")
    bench.add_argument("--log", default=None, metavar="DIR", help="Write one run log (JSON Lines) per case to DIR")
    return parser


def solver_config(args: argparse.Namespace, **overrides) -> SolverConfig:
    values = dict(
        strategies=args.strategies,
        deterministic=args.deterministic,
        seed=args.seed,
        timeout=args.timeout,
        target_width=args.width,
        sat_backend=args.sat_backend,
    )
    if args.initial_width is not None:
        values["initial_width"] = args.initial_width
    values.update(overrides)
    return SolverConfig(**values)


def stats_table(stats: SolverStats, deterministic: bool) -> pd.DataFrame:
    rows = [("iterations", stats.iterations), ("body size", stats.body_size),
            ("counterexamples", stats.counterexamples), ("final (l, w, c)", str(tuple(stats.final_params))),
            ("minimal solution length", stats.minimal_solution_length)]
    rows += [(f"synth wins: {k}", v) for k, v in stats.synth_wins.items()]
    rows += [(f"verif wins: {k}", v) for k, v in stats.verif_wins.items()]
    if not deterministic:
        rows += [("synth time (s)", round(stats.synth_time, 3)), ("verif time (s)", round(stats.verif_time, 3)),
                 ("generalize time (s)", round(stats.generalize_time, 3))]
    return pd.DataFrame(rows, columns=["statistic", "value"])


def print_report(report: RunReport, result: SolverResult, deterministic: bool) -> None:
    line = report.verdict.value + (f" ({report.reason})" if report.reason else "")
    print(line)
    for name, text in report.witnesses.items():
        print(f"\n{name}:\n{text}")
    print()
    print(stats_table(result.stats, deterministic).to_string(index=False))
    print(json.dumps(report.model_dump(mode="json"), sort_keys=True))


def _dual_log_path(path: Optional[str]) -> Optional[str]:
    return f"{path}.negated" if path else None


def run_dual(qbf: QbfFormula, label: str, config: SolverConfig, cancel: threading.Event,
             dump_dir: Optional[str]) -> SolverResult:
    """Solve the QBF and its negation; the first decided side gives the verdict."""
    sides = [
        (qbf_instance(qbf, label), config, False),
        (qbf_instance(negate_qbf(qbf), f"{label}-negated"),
         config.model_copy(update={"log_path": _dual_log_path(config.log_path)}), True),
    ]
    stops = [threading.Event(), threading.Event()]
    solvers = [Solver(inst, cfg, cancel=stop, dump_dir=dump_dir) for (inst, cfg, _), stop in zip(sides, stops)]

    def translate(result: SolverResult, negated: bool) -> SolverResult:
        if not negated or result.verdict is Verdict.UNKNOWN:
            return result
        flipped = Verdict.UNSAT if result.verdict is Verdict.SAT else Verdict.SAT
        # witnesses of the negation refute the original, they do not satisfy it
        return SolverResult(flipped, "decided by the negated formula", {}, result.stats)

    def relay():
        cancel.wait()
        for stop in stops:
            stop.set()

    threading.Thread(target=relay, daemon=True).start()
    if config.deterministic:
        result = solvers[0].solve()
        if result.verdict is not Verdict.UNKNOWN or cancel.is_set():
            return result
        return translate(solvers[1].solve(), negated=True)

    with ThreadPoolExecutor(max_workers=2, thread_name_prefix="dual") as pool:
        futures = {pool.submit(s.solve): negated for s, (_, _, negated) in zip(solvers, sides)}
        pending = set(futures)
        decided: Optional[SolverResult] = None
        last: Optional[SolverResult] = None
        while pending and decided is None:
            done, pending = wait(pending, return_when=FIRST_COMPLETED)
            for future in done:
                last = translate(future.result(), futures[future])
                if last.verdict is not Verdict.UNKNOWN and decided is None:
                    decided = last
        for stop in stops:
            stop.set()
    return decided or last


def solve_command(args: argparse.Namespace) -> int:
    cancel = threading.Event()
    try:
        config = solver_config(args, max_length=args.max_length, enable_shl=args.enable_shl, log_path=args.log)
        instance, qbf = read_input(args.input, enable_shl=args.enable_shl, width=args.width)
        if args.dual and qbf is None:
            raise UsageError("--dual applies to .qdimacs inputs only")
        with interruptible(cancel):
            if args.dual:
                result = run_dual(qbf, instance.label, config, cancel, args.dump_cnf)
            else:
                result = Solver(instance, config, cancel=cancel, dump_dir=args.dump_cnf).solve()
    except (SosatError, OSError, ValidationError) as e:
        logger.error(f"Error in solve: {str(e)}")
        return EXIT_ERROR

    report = RunReport.from_result(args.input, result, config)
    print_report(report, result, config.deterministic)
    return EXIT_CODES[result.verdict]


BENCH_COLUMNS = ["id", "name", "expected", "verdict", "length", "reference length", "iterations", "time (s)"]
SUMMARY_COLUMNS = ["cases", "solved", "avg solution size", "avg iterations", "avg time (s)", "total time (s)"]


def select_cases(cases, pattern: Optional[str], include_hard: bool):
    if not include_hard:
        cases = [c for c in cases if not c.known_hard]
    if pattern is None:
        return cases
    patterns = [p.strip() for p in pattern.split(",")]
    return [c for c in cases if any(fnmatch.fnmatchcase(c.id, p) for p in patterns)]


def summarize(rows: Sequence[Dict[str, Any]], deterministic: bool) -> pd.DataFrame:
    frame = pd.DataFrame(list(rows), columns=BENCH_COLUMNS)
    solved = frame[frame["verdict"] == Verdict.SAT.value]

    def mean(series) -> Optional[float]:
        return round(float(series.mean()), 2) if len(series) else None

    summary = {
        "cases": len(frame),
        "solved": len(solved),
        "avg solution size": mean(solved["length"]),
        "avg iterations": mean(solved["iterations"]),
        "avg time (s)": mean(solved["time (s)"]),
        "total time (s)": round(float(frame["time (s)"].sum()), 2) if len(frame) else 0.0,
    }
    columns = list(SUMMARY_COLUMNS)
    if deterministic:
        columns = [c for c in columns if "time" not in c]
    return pd.DataFrame([summary], columns=columns)


def render(frame: pd.DataFrame) -> str:
    if frame.empty:
        return "  ".join(frame.columns)
    return frame.to_string(index=False)


def bench_command(args: argparse.Namespace) -> int:
    cancel = threading.Event()
    try:
        cases = select_cases(load_corpus(), args.filter, args.include_hard)
        base = solver_config(args, max_length=args.max_length)
    except (SosatError, OSError, ValidationError) as e:
        logger.error(f"Error in bench setup: {str(e)}")
        return EXIT_ERROR

    rows: List[Dict[str, Any]] = []
    interrupted = False
    with interruptible(cancel):
        for case in tqdm(cases, desc="bench", unit="case", file=sys.stderr, disable=not cases):
            if cancel.is_set():
                interrupted = True
                break
            log_path = str(Path(args.log) / f"{case.id}.jsonl") if args.log else None
            config = base.model_copy(update={"enable_shl": case.enable_shl, "log_path": log_path})
            try:
                result = Solver(case.instance(), config, cancel=cancel).solve()
            except (SosatError, OSError) as e:
                logger.error(f"Error in case {case.id}: {str(e)}")
                result = SolverResult(Verdict.UNKNOWN, "error")
            stats = result.stats
            rows.append({
                "id": case.id,
                "name": case.name,
                "expected": case.status,
                "verdict": result.verdict.value,
                "length": stats.minimal_solution_length,
                "reference length": case.reference.length,
                "iterations": stats.iterations,
                "time (s)": round(stats.synth_time + stats.verif_time + stats.generalize_time, 3),
            })
            if result.reason == "interrupted":
                interrupted = True
                break

    table = pd.DataFrame(rows, columns=BENCH_COLUMNS)
    if args.deterministic:
        table = table.drop(columns=["time (s)"])
    print(render(table))
    print()
    print(render(summarize(rows, args.deterministic)))
    if args.output:
        table.to_csv(args.output, index=False)
    if interrupted:
        logger.warning(f"Benchmark interrupted after {len(rows)} of {len(cases)} cases")
        return EXIT_CODES[Verdict.UNKNOWN]
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        set_level(logging.DEBUG)
    if args.command == "solve":
        return solve_command(args)
    return bench_command(args)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except Exception as e:
        logger.error(f"Fatal error in main: {str(e)}")
        raise
