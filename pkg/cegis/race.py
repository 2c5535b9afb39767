"""Racing candidate searches against one another for a single synthesis call."""

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from cegis.types import Candidate
from synthesis.base import StepResult, StepStatus, SynthesisStrategy, SynthRequest
from utils.errors import SosatError
from utils.logger import setup_logger

logger = setup_logger("cegis")

STOP_INTERRUPTED = "interrupted"
STOP_TIMEOUT = "timeout"
STOP_GAVE_UP = "gave-up"


@dataclass
class Entrant:
    """A strategy instance in the race; members of one group share the search space."""

    strategy: SynthesisStrategy
    group: str
    budget: int


@dataclass
class RaceOutcome:
    status: StepStatus
    candidate: Optional[Candidate] = None
    winner: Optional[str] = None
    reason: str = ""


@dataclass
class _Tally:
    members: Dict[str, int]
    exhausted: Dict[str, int] = field(default_factory=dict)

    def exhaust(self, group: str) -> bool:
        """Record one exhausted member; True once the whole group is exhausted."""
        self.exhausted[group] = self.exhausted.get(group, 0) + 1
        return self.exhausted[group] == self.members[group]


class StrategyRace:
    """Runs entrants until one finds a candidate or a complete group is exhausted.

    Deterministic mode takes turns in a fixed order with fixed budgets; otherwise
    every entrant runs on its own thread and the first decision cancels the rest.
    """

    def __init__(self, entrants: List[Entrant], deterministic: bool = False,
                 cancel: Optional[threading.Event] = None, deadline: Optional[float] = None):
        if not entrants:
            raise ValueError("A race needs at least one strategy")
        self.entrants = entrants
        self.deterministic = deterministic
        self.cancel = cancel or threading.Event()
        self.deadline = deadline

    def _stop_reason(self) -> Optional[str]:
        if self.cancel.is_set():
            return STOP_INTERRUPTED
        if self.deadline is not None and time.monotonic() > self.deadline:
            return STOP_TIMEOUT
        return None

    def _tally(self) -> _Tally:
        members: Dict[str, int] = {}
        for e in self.entrants:
            members[e.group] = members.get(e.group, 0) + 1
        return _Tally(members)

    def _step(self, entrant: Entrant) -> StepResult:
        try:
            return entrant.strategy.step(entrant.budget)
        except SosatError as e:
            logger.error(f"Error in {entrant.group} search: {str(e)}")
            raise

    def run(self, request: SynthRequest) -> RaceOutcome:
        for e in self.entrants:
            e.strategy.begin(request)
        if self.deterministic:
            return self._round_robin()
        return self._threaded()

    def _round_robin(self) -> RaceOutcome:
        tally = self._tally()
        active = list(self.entrants)
        while active:
            for entrant in list(active):
                reason = self._stop_reason()
                if reason:
                    return RaceOutcome(StepStatus.PENDING, reason=reason)
                result = self._step(entrant)
                if result.status is StepStatus.FOUND:
                    return RaceOutcome(StepStatus.FOUND, result.candidate, entrant.group)
                if result.status is StepStatus.EXHAUSTED:
                    active.remove(entrant)
                    if entrant.strategy.complete and tally.exhaust(entrant.group):
                        return RaceOutcome(StepStatus.EXHAUSTED, winner=entrant.group)
                elif result.status is StepStatus.GAVE_UP:
                    logger.debug(f"{entrant.group} dropped out: {result.reason}")
                    active.remove(entrant)
        return RaceOutcome(StepStatus.PENDING, reason=STOP_GAVE_UP)

    def _threaded(self) -> RaceOutcome:
        tally = self._tally()
        lock = threading.Lock()
        stop = threading.Event()
        outcome: List[RaceOutcome] = []

        def decide(result: RaceOutcome) -> None:
            with lock:
                if not outcome:
                    outcome.append(result)
                    stop.set()

        def work(entrant: Entrant) -> None:
            while not stop.is_set():
                result = self._step(entrant)
                if result.status is StepStatus.FOUND:
                    decide(RaceOutcome(StepStatus.FOUND, result.candidate, entrant.group))
                    return
                if result.status is StepStatus.EXHAUSTED:
                    if entrant.strategy.complete:
                        with lock:
                            done = tally.exhaust(entrant.group)
                        if done:
                            decide(RaceOutcome(StepStatus.EXHAUSTED, winner=entrant.group))
                    return
                if result.status is StepStatus.GAVE_UP:
                    logger.debug(f"{entrant.group} dropped out: {result.reason}")
                    return

        with ThreadPoolExecutor(max_workers=len(self.entrants), thread_name_prefix="synth") as pool:
            futures = [pool.submit(work, e) for e in self.entrants]
            while not stop.is_set() and not all(f.done() for f in futures):
                reason = self._stop_reason()
                if reason:
                    decide(RaceOutcome(StepStatus.PENDING, reason=reason))
                    break
                stop.wait(0.02)
            stop.set()
            for e in self.entrants:
                e.strategy.cancel()
            errors = [f.exception() for f in futures if f.exception() is not None]
        if errors and not (outcome and outcome[0].status is StepStatus.FOUND):
            raise errors[0]
        if outcome:
            return outcome[0]
        return RaceOutcome(StepStatus.PENDING, reason=STOP_GAVE_UP)

    def close(self) -> None:
        for e in self.entrants:
            e.strategy.close()
