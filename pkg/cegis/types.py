"""Data passed between the refinement loop, the strategies and the reports."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Set, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from config import (
    DEFAULT_SEED,
    EXPLICIT_TURN_BUDGET,
    GP_CROSSOVER,
    GP_ELITE,
    GP_GENERATIONS_PER_TURN,
    GP_LENGTH_SLACK,
    GP_MUTATION,
    GP_POPULATION,
    GP_TOURNAMENT,
    GP_TURN_BUDGET,
    INITIAL_WIDTH,
    PARALLELISM,
    SAT_BACKEND,
    SYMBOLIC_TURN_BUDGET,
    TIMEOUT,
)
from formula.ast import Assignment, SynthesisInstance, active_var_width
from lang.machine import mask
from lang.program import Program
from utils.errors import SolverInternalError

STRATEGIES = ("explicit", "symbolic", "gp")


class Verdict(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNKNOWN = "UNKNOWN"


class GpConfig(BaseModel):
    population: int = Field(default=GP_POPULATION, ge=1)
    tournament: int = Field(default=GP_TOURNAMENT, ge=1)
    crossover: float = Field(default=GP_CROSSOVER, ge=0.0, le=1.0)
    mutation: float = Field(default=GP_MUTATION, ge=0.0, le=1.0)
    elite: int = Field(default=GP_ELITE, ge=0)
    generations_per_turn: int = Field(default=GP_GENERATIONS_PER_TURN, ge=1)
    length_slack: int = Field(default=GP_LENGTH_SLACK, ge=0)

    @model_validator(mode="after")
    def elite_below_population(self):
        if self.elite >= self.population:
            raise ValueError("elite count must be smaller than the population")
        return self


class SolverConfig(BaseModel):
    strategies: List[str] = Field(default_factory=lambda: list(STRATEGIES))
    deterministic: bool = False
    seed: int = DEFAULT_SEED
    timeout: float = Field(default=TIMEOUT, gt=0)
    max_length: Optional[int] = Field(default=None, ge=1)
    target_width: Optional[int] = Field(default=None, ge=1, le=64)
    initial_width: int = Field(default=INITIAL_WIDTH, ge=1, le=64)
    initial_length: int = Field(default=1, ge=1)
    parallelism: int = Field(default=PARALLELISM, ge=1)
    sat_backend: str = SAT_BACKEND
    enable_shl: bool = False
    gp: GpConfig = Field(default_factory=GpConfig)
    explicit_turn_budget: int = Field(default=EXPLICIT_TURN_BUDGET, ge=1)
    symbolic_turn_budget: int = Field(default=SYMBOLIC_TURN_BUDGET, ge=1)
    gp_turn_budget: int = Field(default=GP_TURN_BUDGET, ge=1)
    log_path: Optional[str] = None

    @field_validator("strategies")
    @classmethod
    def known_strategies(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("at least one strategy must be enabled")
        unknown = [s for s in value if s not in STRATEGIES]
        if unknown:
            raise ValueError(f"unknown strategies: {', '.join(unknown)}")
        # race order is fixed so deterministic runs agree
        return [s for s in STRATEGIES if s in value]


@dataclass(frozen=True)
class Candidate:
    witnesses: Dict[str, Program]
    origin: str
    params: Tuple[int, int, int]

    @property
    def total_length(self) -> int:
        return sum(p.length for p in self.witnesses.values())


@dataclass
class SearchState:
    l: int
    w: int
    c: int
    target_width: int
    inputs: List[Assignment] = field(default_factory=list)
    generation: int = 0
    _seen: Set[Tuple[int, ...]] = field(default_factory=set, repr=False)

    def params(self) -> Tuple[int, int, int]:
        return (self.l, self.w, self.c)

    def add_input(self, assignment: Assignment, instance: SynthesisInstance) -> None:
        key = tuple(assignment[v.name] for v in instance.universals)
        if key in self._seen:
            raise SolverInternalError(
                f"Counterexample {assignment} was already stored: candidate search and verification disagree"
            )
        self._seen.add(key)
        self.inputs.append(dict(assignment))

    def inputs_at(self, instance: SynthesisInstance, width: int) -> Tuple[Assignment, ...]:
        """Stored inputs as seen by a machine of the given width."""
        return tuple(mask_assignment(a, instance, width) for a in self.inputs)


def mask_assignment(assignment: Mapping[str, int], instance: SynthesisInstance, width: int) -> Assignment:
    return {v.name: assignment[v.name] & mask(active_var_width(v, width)) for v in instance.universals}


class SolverStats(BaseModel):
    iterations: int = 0
    synth_wins: Dict[str, int] = Field(default_factory=lambda: {s: 0 for s in STRATEGIES})
    verif_wins: Dict[str, int] = Field(default_factory=lambda: {"explicit": 0, "symbolic": 0})
    synth_time: float = 0.0
    verif_time: float = 0.0
    generalize_time: float = 0.0
    final_params: Tuple[int, int, int] = (0, 0, 0)
    minimal_solution_length: Optional[int] = None
    body_size: int = 0
    counterexamples: int = 0


@dataclass
class SolverResult:
    verdict: Verdict
    reason: Optional[str] = None
    witnesses: Dict[str, Program] = field(default_factory=dict)
    stats: SolverStats = field(default_factory=SolverStats)
