"""The refinement loop: synthesise on stored inputs, verify, learn, widen.

Parameters walk the lattice (l, w, c): a failed synthesis raises c up to l and
then l; a candidate that is correct at the small width but does not lift to the
target width raises w. Passing the length bound below the target width moves to
the next width and restarts at the shortest length, so within a width lengths
never decrease and the first witness found at the target width is shortest.
"""

import threading
import time
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple, Union

from cegis.race import Entrant, RaceOutcome, StrategyRace
from cegis.types import (
    Candidate,
    SearchState,
    SolverConfig,
    SolverResult,
    SolverStats,
    Verdict,
)
from config import ENABLE_FLOAT, GENERALIZE_TRIAL_CAP
from formula.ast import SynthesisInstance, body_size, input_bit_count
from formula.evaluate import check_witnesses
from lang.program import Program
from synthesis.base import StepStatus, SynthRequest, program_functions
from synthesis.explicit import ExplicitStrategy
from synthesis.gp import GpStrategy
from synthesis.sat_backend import SatBackend
from synthesis.symbolic import SymbolicStrategy
from utils.errors import (
    BackendTimeout,
    BackendUnavailable,
    CapacityError,
    SearchCancelled,
    SolverInternalError,
)
from utils.logger import setup_logger
from utils.run_log import RunLog
from verification.counterexample import CounterexampleSearch, default_plan
from verification.generalize import generalize_constants

logger = setup_logger("cegis")


@dataclass(frozen=True)
class SynthFailed:
    pass


@dataclass(frozen=True)
class VerifFailed:
    small_width_ok: bool
    generalized: bool = False


Outcome = Union[SynthFailed, VerifFailed]


def next_params(state: SearchState, outcome: Outcome) -> SearchState:
    """One step of the parameter walk; the stored inputs travel unchanged."""
    if isinstance(outcome, SynthFailed):
        if state.c < state.l:
            return replace(state, c=state.c + 1)
        return replace(state, l=state.l + 1, c=0)
    if not outcome.small_width_ok or outcome.generalized:
        return state
    return replace(state, w=min(state.w + 1, state.target_width))


def length_bound(instance: SynthesisInstance, width: int) -> int:
    """Total length beyond which no witness map can be needed at this width."""
    k = len(program_functions(instance))
    return max(1, k) * (1 << input_bit_count(instance, width))


def stopping_bound(instance: SynthesisInstance, cap: Optional[int] = None, width: Optional[int] = None) -> int:
    """2^n for n input bits (per program symbol), saturated at the cap."""
    bound = length_bound(instance, instance.width if width is None else width)
    return bound if cap is None else min(bound, cap)


def build_entrants(config: SolverConfig, backend: Optional[SatBackend] = None,
                   dump_dir: Optional[str] = None) -> List[Entrant]:
    entrants: List[Entrant] = []
    if "explicit" in config.strategies:
        partitions = 1 if config.deterministic else config.parallelism
        for k in range(partitions):
            entrants.append(Entrant(ExplicitStrategy(stride=partitions, offset=k), "explicit",
                                    config.explicit_turn_budget))
    if "symbolic" in config.strategies:
        entrants.append(Entrant(SymbolicStrategy(backend, dump_dir), "symbolic", config.symbolic_turn_budget))
    if "gp" in config.strategies:
        entrants.append(Entrant(GpStrategy(config.gp, config.seed), "gp", config.gp_turn_budget))
    return entrants


class Solver:
    """One solve of one instance; owns the search state and all statistics."""

    def __init__(self, instance: SynthesisInstance, config: Optional[SolverConfig] = None,
                 run_log: Optional[RunLog] = None, cancel: Optional[threading.Event] = None,
                 dump_dir: Optional[str] = None):
        self.config = config or SolverConfig()
        if self.config.enable_shl and not instance.enable_shl:
            instance = replace(instance, enable_shl=True)
        self.instance = instance
        self._owns_log = run_log is None
        self.run_log = run_log or RunLog(self.config.log_path)
        self.cancel = cancel or threading.Event()
        self.target_width = self.config.target_width or instance.width
        needs_sat = "symbolic" in self.config.strategies or self._needs_symbolic_verify()
        self.backend = SatBackend(self.config.sat_backend) if needs_sat else None
        self.dump_dir = dump_dir
        self.stats = SolverStats(body_size=body_size(instance.body))
        self.state = SearchState(
            l=self.config.initial_length,
            w=min(self.config.initial_width, self.target_width),
            c=0,
            target_width=self.target_width,
        )
        self.deadline: Optional[float] = None

    def _needs_symbolic_verify(self) -> bool:
        return default_plan(self.instance, self.target_width).mode != "explicit"

    # events

    def _emit(self, event: str, **fields) -> None:
        self.run_log.emit(event, **fields)

    def _move(self, new: SearchState, reason: str) -> None:
        old = self.state
        if new.params() != old.params():
            logger.info(f"Parameters {old.params()} -> {new.params()} ({reason})")
            self._emit("param-change", reason=reason, before=list(old.params()), after=list(new.params()))
        self.state = new

    def _finish(self, verdict: Verdict, reason: Optional[str] = None,
                witnesses: Optional[Dict[str, Program]] = None) -> SolverResult:
        self.stats.final_params = self.state.params()
        self.stats.counterexamples = len(self.state.inputs)
        witnesses = witnesses or {}
        if verdict is Verdict.SAT:
            self.stats.minimal_solution_length = sum(p.length for p in witnesses.values())
        self._emit(
            "verdict", verdict=verdict.value, reason=reason, seed=self.config.seed,
            length=self.stats.minimal_solution_length, iterations=self.stats.iterations,
            synth_wins=dict(self.stats.synth_wins), verif_wins=dict(self.stats.verif_wins),
        )
        logger.info(f"Verdict {verdict.value}" + (f" ({reason})" if reason else ""))
        return SolverResult(verdict, reason, dict(witnesses), self.stats)

    def _stop_reason(self) -> Optional[str]:
        if self.cancel.is_set():
            return "interrupted"
        if self.deadline is not None and time.monotonic() > self.deadline:
            return "timeout"
        return None

    # verification

    def _search(self, witnesses: Dict[str, Program], width: int) -> Tuple[Optional[dict], str]:
        plan = default_plan(self.instance, width, self.config.seed + self.state.generation)
        search = CounterexampleSearch(self.instance, witnesses, width, plan, self.backend,
                                      self.cancel, self.deadline)
        started = time.perf_counter()
        try:
            cex = search.run()
        finally:
            self.stats.verif_time += time.perf_counter() - started
        self.stats.verif_wins[search.winner] += 1
        if cex is None:
            self._emit("verif-valid", width=width, engine=search.winner)
        return cex, search.winner

    def _learn(self, cex: dict, width: int, engine: str) -> None:
        logger.info(f"Counterexample at width {width}: {cex}")
        self._emit("cex", width=width, engine=engine, assignment=dict(sorted(cex.items())))
        try:
            self.state.add_input(cex, self.instance)
        except SolverInternalError as e:
            logger.error(f"Error storing counterexample: {str(e)}")
            raise

    def _verify(self, candidate: Candidate) -> Optional[Dict[str, Program]]:
        """Verified witnesses at the target width, or None after updating the state."""
        state = self.state
        W = self.target_width
        self.stats.iterations += 1
        state.generation += 1
        cex, engine = self._search(candidate.witnesses, state.w)
        if cex is not None:
            self._learn(cex, state.w, engine)
            self._move(next_params(state, VerifFailed(small_width_ok=False)), "counterexample")
            return None
        if state.w == W:
            return candidate.witnesses

        started = time.perf_counter()
        try:
            lifted = generalize_constants(
                candidate.witnesses, self.instance, state.w, W, GENERALIZE_TRIAL_CAP,
                inputs=tuple(state.inputs), backend=self.backend, cancel=self.cancel,
                deadline=self.deadline,
            )
        finally:
            self.stats.generalize_time += time.perf_counter() - started
        self._emit("generalize", ok=lifted is not None, width=state.w, target=W)
        if lifted is not None:
            return lifted
        self._move(next_params(state, VerifFailed(small_width_ok=True, generalized=False)), "generalization failed")
        return None

    # main loop

    def _exhausted(self) -> Optional[SolverResult]:
        """Walk the parameters after an exhausted synthesis; a result when the walk ends."""
        state = self.state
        if not program_functions(self.instance):
            # constant tables do not depend on (l, c)
            if state.w < self.target_width:
                self._move(replace(state, w=state.w + 1), "constants exhausted")
                return None
            return self._finish(Verdict.UNSAT, "bound")
        self._move(next_params(state, SynthFailed()), "synthesis exhausted")
        return None

    def solve(self) -> SolverResult:
        config = self.config
        self.deadline = time.monotonic() + config.timeout
        race = StrategyRace(build_entrants(config, self.backend, self.dump_dir), config.deterministic,
                            self.cancel, self.deadline)
        logger.info(
            f"Solving {self.instance.label or 'instance'}: {input_bit_count(self.instance, self.target_width)} "
            f"input bits, width {self.state.w} -> {self.target_width}, strategies {','.join(config.strategies)}"
        )
        try:
            return self._loop(race)
        except SearchCancelled:
            return self._finish(Verdict.UNKNOWN, self._stop_reason() or "interrupted")
        except (BackendTimeout, BackendUnavailable, CapacityError) as e:
            logger.error(f"Error during verification: {str(e)}")
            return self._finish(Verdict.UNKNOWN, "verification-failed")
        finally:
            race.close()
            if self._owns_log:
                self.run_log.close()

    def _loop(self, race: StrategyRace) -> SolverResult:
        cap = self.config.max_length
        while True:
            reason = self._stop_reason()
            if reason:
                return self._finish(Verdict.UNKNOWN, reason)
            state = self.state
            if state.l > length_bound(self.instance, state.w):
                if state.w < self.target_width:
                    # lengths restart per width
                    self._move(replace(state, w=state.w + 1, l=self.config.initial_length, c=0), "length bound reached")
                    continue
                return self._finish(Verdict.UNSAT, "bound")
            if cap is not None and state.l > cap:
                return self._finish(Verdict.UNKNOWN, "cap")

            request = SynthRequest(self.instance, state.inputs_at(self.instance, state.w), state.l, state.c,
                                   state.w, enable_float=ENABLE_FLOAT)
            self._emit("synth-start", l=state.l, w=state.w, c=state.c, inputs=len(state.inputs))
            logger.debug(f"Synthesising at {state.params()} with {len(state.inputs)} inputs")
            started = time.perf_counter()
            try:
                outcome: RaceOutcome = race.run(request)
            finally:
                self.stats.synth_time += time.perf_counter() - started

            if outcome.status is StepStatus.PENDING:
                return self._finish(Verdict.UNKNOWN, outcome.reason)
            if outcome.status is StepStatus.EXHAUSTED:
                self._emit("synth-exhausted", l=state.l, w=state.w, c=state.c, engine=outcome.winner)
                result = self._exhausted()
                if result is not None:
                    return result
                continue

            candidate = outcome.candidate
            self.stats.synth_wins[outcome.winner] += 1
            self._emit("candidate", origin=outcome.winner, l=state.l, w=state.w, c=state.c,
                       length=candidate.total_length,
                       witnesses={name: str(p) for name, p in sorted(candidate.witnesses.items())})
            logger.info(f"Candidate from {outcome.winner} at {state.params()}, length {candidate.total_length}")
            witnesses = self._verify(candidate)
            if witnesses is not None:
                check_witnesses(self.instance.functions, witnesses, self.target_width)
                return self._finish(Verdict.SAT, witnesses=witnesses)


def solve(instance: SynthesisInstance, config: Optional[SolverConfig] = None, run_log: Optional[RunLog] = None,
          cancel: Optional[threading.Event] = None, dump_dir: Optional[str] = None) -> SolverResult:
    return Solver(instance, config, run_log, cancel, dump_dir).solve()
