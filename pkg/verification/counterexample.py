"""Counterexample search: an assignment on which fixed witnesses falsify the body.

Explicit search walks the assignment space in a chosen order; symbolic search
bit-blasts the negated body with the witness programs inlined and asks the SAT
backend. Above the explicit threshold the two race.
"""

import random
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional

from config import EXPLICIT_FALLBACK_MAX_BITS, EXPLICIT_VERIFY_MAX_BITS, RANDOM_PROBES
from formula.ast import Assignment, SynthesisInstance, active_var_width, input_bit_count
from formula.evaluate import check_witnesses, evaluate_body
from lang.program import Program
from synthesis.bitblast import CircuitBuilder, Word, blast_expr, blast_program, word_value
from synthesis.sat_backend import SatBackend, SatSession
from utils.errors import (
    BackendTimeout,
    BackendUnavailable,
    CapacityError,
    SearchCancelled,
    SolverInternalError,
)
from utils.logger import setup_logger

logger = setup_logger("verification")

EXPLICIT = "explicit"
SYMBOLIC = "symbolic"
RACE = "race"
MODES = (EXPLICIT, SYMBOLIC, RACE)

COUNTING = "counting"
GRAY_CODE = "gray-code"
RANDOM_THEN_EXHAUSTIVE = "random-then-exhaustive"
ORDERS = (COUNTING, GRAY_CODE, RANDOM_THEN_EXHAUSTIVE)

# assignments between cancellation checks
_POLL = 1024

_SYMBOLIC_FAILURES = (BackendTimeout, BackendUnavailable, CapacityError)


@dataclass(frozen=True)
class CexSearchPlan:
    mode: str = EXPLICIT
    order: str = RANDOM_THEN_EXHAUSTIVE
    seed: int = 0
    probes: int = RANDOM_PROBES

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"Unknown counterexample search mode '{self.mode}'")
        if self.order not in ORDERS:
            raise ValueError(f"Unknown enumeration order '{self.order}'")
        if self.probes < 0:
            raise ValueError("Probe count must be non-negative")


def default_plan(instance: SynthesisInstance, width: int, seed: int = 0) -> CexSearchPlan:
    """Explicit alone while the space is small enough to sweep, a race above."""
    bits = input_bit_count(instance, width)
    return CexSearchPlan(mode=EXPLICIT if bits <= EXPLICIT_VERIFY_MAX_BITS else RACE, seed=seed)


class AssignmentSpace:
    """Bijection between 0..2^n-1 and assignments; the first variable is most significant."""

    def __init__(self, instance: SynthesisInstance, width: int):
        self.variables = instance.universals
        self.widths = [active_var_width(v, width) for v in self.variables]
        self.bits = sum(self.widths)
        self.size = 1 << self.bits

    def decode(self, index: int) -> Assignment:
        values = {}
        for var, w in zip(reversed(self.variables), reversed(self.widths)):
            values[var.name] = index & ((1 << w) - 1)
            index >>= w
        return {v.name: values[v.name] for v in self.variables}


def _stopped(cancel: Optional[threading.Event], deadline: Optional[float]) -> bool:
    if cancel is not None and cancel.is_set():
        return True
    return deadline is not None and time.monotonic() > deadline


class ExplicitSearch:
    """Evaluates the body point by point; `visited` counts the exhaustive sweep."""

    def __init__(self, instance: SynthesisInstance, witnesses: Mapping[str, Program], width: int,
                 plan: CexSearchPlan, cancel: Optional[threading.Event] = None,
                 deadline: Optional[float] = None):
        self.instance = instance
        self.witnesses = witnesses
        self.width = width
        self.plan = plan
        self.cancel = cancel
        self.deadline = deadline
        self.space = AssignmentSpace(instance, width)
        self.visited = 0
        self.probed = 0

    def _falsifies(self, point: Assignment) -> bool:
        return not evaluate_body(self.instance.body, point, self.witnesses, self.width)

    def _sweep(self) -> Iterator[int]:
        if self.plan.order == GRAY_CODE:
            for i in range(self.space.size):
                yield i ^ (i >> 1)
        else:
            yield from range(self.space.size)

    def run(self) -> Optional[Assignment]:
        size = self.space.size
        if self.plan.order == RANDOM_THEN_EXHAUSTIVE:
            rng = random.Random(self.plan.seed)
            for _ in range(min(self.plan.probes, size)):
                point = self.space.decode(rng.randrange(size))
                self.probed += 1
                if self._falsifies(point):
                    return point
        for k, index in enumerate(self._sweep()):
            if k % _POLL == 0 and _stopped(self.cancel, self.deadline):
                raise SearchCancelled(f"explicit search stopped after {self.visited} assignments")
            self.visited += 1
            point = self.space.decode(index)
            if self._falsifies(point):
                return point
        return None


class SymbolicSearch:
    """One SAT call on the negated body, witnesses inlined as circuits."""

    def __init__(self, instance: SynthesisInstance, witnesses: Mapping[str, Program], width: int,
                 backend: Optional[SatBackend] = None, deadline: Optional[float] = None):
        self.instance = instance
        self.witnesses = witnesses
        self.width = width
        self.backend = backend or SatBackend()
        self.deadline = deadline
        self._lock = threading.Lock()
        self._session: Optional[SatSession] = None
        self._cancelled = False

    def encode(self):
        b = CircuitBuilder()
        env: Dict[str, Word] = {}
        inputs: Dict[str, Word] = {}
        for var in self.instance.universals:
            d = active_var_width(var, self.width)
            inputs[var.name] = b.new_word(d, ("x", var.name))
            env[var.name] = inputs[var.name] + [b.FALSE] * (self.width - d)

        def instantiate(name, args) -> List[Word]:
            return blast_program(b, self.witnesses[name], args)

        truth = b.nonzero(blast_expr(b, self.instance.body, env, self.width, instantiate, {}))
        b.assert_true(-truth)
        return b.cnf, inputs

    def run(self) -> Optional[Assignment]:
        cnf, inputs = self.encode()
        with self._lock:
            if self._cancelled:
                raise SearchCancelled("symbolic search cancelled before solving")
            self._session = self.backend.open(cnf)
        timer = None
        if self.deadline is not None:
            timer = threading.Timer(max(0.0, self.deadline - time.monotonic()), self.cancel)
            timer.daemon = True
            timer.start()
        try:
            result = self._session.solve()
            model = self._session.model() if result else []
        finally:
            if timer is not None:
                timer.cancel()
            with self._lock:
                self._session.close()
                self._session = None
        if result is None:
            if self._cancelled:
                raise SearchCancelled("symbolic search interrupted")
            raise BackendTimeout("SAT backend returned no verdict")
        if not result:
            return None
        true_lits = {lit for lit in model if lit > 0}
        point = {name: word_value(true_lits, word) for name, word in inputs.items()}
        if evaluate_body(self.instance.body, point, self.witnesses, self.width):
            raise SolverInternalError(f"Symbolic counterexample {point} does not falsify the body on re-execution")
        return point

    def cancel(self) -> None:
        with self._lock:
            self._cancelled = True
            if self._session is not None:
                self._session.interrupt()


class CounterexampleSearch:
    """Runs one plan; `winner` names the engine that decided and `visited` the sweep size."""

    def __init__(self, instance: SynthesisInstance, witnesses: Mapping[str, Program], width: int,
                 plan: Optional[CexSearchPlan] = None, backend: Optional[SatBackend] = None,
                 cancel: Optional[threading.Event] = None, deadline: Optional[float] = None):
        check_witnesses(instance.functions, witnesses, width)
        self.instance = instance
        self.witnesses = witnesses
        self.width = width
        self.plan = plan or default_plan(instance, width)
        self.backend = backend
        self.cancel = cancel
        self.deadline = deadline
        self.bits = input_bit_count(instance, width)
        self.winner: Optional[str] = None
        self.visited = 0

    def _explicit(self, cancel: Optional[threading.Event] = None) -> ExplicitSearch:
        return ExplicitSearch(self.instance, self.witnesses, self.width, self.plan,
                              cancel or self.cancel, self.deadline)

    def _symbolic(self) -> SymbolicSearch:
        return SymbolicSearch(self.instance, self.witnesses, self.width, self.backend, self.deadline)

    def run(self) -> Optional[Assignment]:
        if self.plan.mode == EXPLICIT:
            return self._run_explicit()
        if self.plan.mode == SYMBOLIC:
            return self._run_symbolic()
        return self._run_race()

    def _run_explicit(self) -> Optional[Assignment]:
        search = self._explicit()
        try:
            result = search.run()
        finally:
            self.visited = search.visited
        self.winner = EXPLICIT
        return result

    def _run_symbolic(self) -> Optional[Assignment]:
        try:
            result = self._symbolic().run()
        except _SYMBOLIC_FAILURES as e:
            if self.bits > EXPLICIT_FALLBACK_MAX_BITS:
                logger.error(f"Error in symbolic verification with {self.bits} input bits: {str(e)}")
                raise
            logger.warning(f"Symbolic verification failed, sweeping explicitly: {str(e)}")
            return self._run_explicit()
        self.winner = SYMBOLIC
        return result

    def _run_race(self) -> Optional[Assignment]:
        stop = threading.Event()
        explicit = self._explicit(stop)
        symbolic = self._symbolic()
        decided = False
        result: Optional[Assignment] = None
        failure: Optional[Exception] = None
        with ThreadPoolExecutor(max_workers=2, thread_name_prefix="verif") as pool:
            futures = {pool.submit(explicit.run): EXPLICIT, pool.submit(symbolic.run): SYMBOLIC}
            pending = set(futures)
            while pending and not decided:
                done, pending = wait(pending, timeout=0.05, return_when=FIRST_COMPLETED)
                for future in done:
                    try:
                        value = future.result()
                    except SearchCancelled:
                        continue
                    except _SYMBOLIC_FAILURES as e:
                        logger.warning(f"Symbolic verification dropped out of the race: {str(e)}")
                        failure = e
                        if self.bits > EXPLICIT_FALLBACK_MAX_BITS:
                            pending = set()
                        continue
                    if not decided:
                        decided = True
                        result = value
                        self.winner = futures[future]
                if decided or _stopped(self.cancel, self.deadline) or (failure is not None and not pending):
                    stop.set()
                    symbolic.cancel()
            stop.set()
            symbolic.cancel()
        self.visited = explicit.visited
        if decided:
            return result
        if failure is not None and not _stopped(self.cancel, self.deadline):
            raise failure
        raise SearchCancelled("counterexample race stopped without a verdict")


def find_counterexample(witnesses: Mapping[str, Program], instance: SynthesisInstance, width: int,
                        plan: Optional[CexSearchPlan] = None, backend: Optional[SatBackend] = None,
                        cancel: Optional[threading.Event] = None,
                        deadline: Optional[float] = None) -> Optional[Assignment]:
    """None iff the body holds on every assignment at this width."""
    return CounterexampleSearch(instance, witnesses, width, plan, backend, cancel, deadline).run()
