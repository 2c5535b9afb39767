"""Genetic programming over L-programs with incremental evolution.

The population outlives a single synthesis call: each refinement iteration
continues evolving the population it ended with, against the grown input set.
"""

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from cegis.types import Candidate, GpConfig
from formula.ast import Assignment, FunctionSignature, SynthesisInstance
from formula.evaluate import evaluate_body
from lang.machine import mask
from lang.opcodes import Opcode, OperandKind
from lang.program import Instruction, Operand, Program, canonicalize
from synthesis.base import (
    Shape,
    StepResult,
    StepStatus,
    SynthesisStrategy,
    SynthRequest,
    constant_functions,
)
from utils.logger import setup_logger

logger = setup_logger("synthesis.gp")


@dataclass
class Individual:
    witnesses: Dict[str, Program]
    cached_fitness: Optional[int] = None


@dataclass
class Population:
    capacity: int
    individuals: List[Individual] = field(default_factory=list)
    generation: int = 0
    width: Optional[int] = None
    # size of the input set the cached fitness values refer to
    input_count: int = 0

    def invalidate(self) -> None:
        for ind in self.individuals:
            ind.cached_fitness = None

    def best(self) -> Optional[Individual]:
        scored = [i for i in self.individuals if i.cached_fitness is not None]
        return max(scored, key=lambda i: i.cached_fitness, default=None)


def random_word(width: int, rng: random.Random) -> int:
    m = mask(width)
    if rng.random() < 0.5:
        return rng.choice((0, 1, m, 1 << (width - 1)))
    return rng.randint(0, m)


def _flat(operand: Operand, const_count: int, arity: int) -> int:
    if operand.kind is OperandKind.CONST:
        return operand.index
    if operand.kind is OperandKind.INPUT:
        return const_count + operand.index
    return const_count + arity + operand.index


def _unflat(index: int, const_count: int, arity: int) -> Operand:
    if index < const_count:
        return Operand.const(index)
    if index < const_count + arity:
        return Operand.input(index - const_count)
    return Operand.temp(index - const_count - arity)


def random_operand(const_count: int, arity: int, position: int, rng: random.Random) -> Operand:
    return _unflat(rng.randrange(const_count + arity + position), const_count, arity)


def repair(program: Program) -> Program:
    """Map every out-of-range operand back into range, modulo the legal source count."""
    c, n = len(program.constants), program.arity
    body = []
    for i, instr in enumerate(program.body):
        sources = c + n + i
        operands = tuple(_unflat(_flat(o, c, n) % sources, c, n) for o in instr.operands)
        body.append(Instruction(instr.opcode, operands))
    return Program(program.arity, program.out_count, program.width, program.constants, tuple(body))


def random_program(sig: FunctionSignature, length: int, const_count: int, width: int,
                   opcodes: Sequence[Opcode], rng: random.Random) -> Program:
    if sig.arity == 0:
        return Program(0, sig.out_count, width, tuple(random_word(width, rng) for _ in range(sig.out_count)), ())
    constants = tuple(random_word(width, rng) for _ in range(const_count))
    body = []
    for i in range(max(length, sig.out_count)):
        op = rng.choice(opcodes)
        operands = tuple(random_operand(const_count, sig.arity, i, rng) for _ in range(op.arity))
        body.append(Instruction(op, operands))
    return Program(sig.arity, sig.out_count, width, constants, tuple(body))


def random_individual(instance: SynthesisInstance, split: Sequence[Shape], width: int,
                      opcodes: Sequence[Opcode], slack: int, rng: random.Random) -> Individual:
    witnesses = {}
    for shape in split:
        sig = instance.signature(shape.name)
        length = shape.length + rng.randint(0, slack)
        witnesses[sig.name] = random_program(sig, length, shape.const_count, width, opcodes, rng)
    for sig in constant_functions(instance):
        witnesses[sig.name] = random_program(sig, 0, 0, width, opcodes, rng)
    return Individual(witnesses)


def fitness(individual: Individual, instance: SynthesisInstance, inputs: Sequence[Assignment], width: int) -> int:
    """Number of stored inputs on which the individual satisfies the body."""
    if individual.cached_fitness is None:
        individual.cached_fitness = sum(
            1 for a in inputs if evaluate_body(instance.body, a, individual.witnesses, width)
        )
    return individual.cached_fitness


def select(population: Population, rng: random.Random, tournament: int) -> Individual:
    """Tournament without replacement; ties go to the earliest drawn contender."""
    individuals = population.individuals
    contenders = rng.sample(individuals, min(tournament, len(individuals)))
    best = contenders[0]
    for ind in contenders[1:]:
        if ind.cached_fitness > best.cached_fitness:
            best = ind
    return best


def crossover_programs(a: Program, b: Program, rng: random.Random) -> Program:
    if not a.body:
        return a if rng.random() < 0.5 else b
    cut = rng.randint(0, min(a.length, b.length))
    body = a.body[:cut] + b.body[cut:]
    if len(body) < a.out_count:
        body = body + a.body[len(body):a.out_count]
    return repair(Program(a.arity, a.out_count, a.width, a.constants, body))


def crossover(a: Individual, b: Individual, rng: random.Random) -> Individual:
    """Single-point crossover per witness, operands repaired into range."""
    return Individual({name: crossover_programs(p, b.witnesses[name], rng) for name, p in a.witnesses.items()})


def mutate_program(program: Program, rate: float, opcodes: Sequence[Opcode], rng: random.Random) -> Program:
    w = program.width
    constants = tuple(random_word(w, rng) if rng.random() < rate else v for v in program.constants)
    c, n = len(constants), program.arity
    body = []
    for i, instr in enumerate(program.body):
        op = instr.opcode
        operands = list(instr.operands)
        if rng.random() < rate:
            op = rng.choice(opcodes)
            while len(operands) < op.arity:
                operands.append(random_operand(c, n, i, rng))
            operands = operands[:op.arity]
        operands = [random_operand(c, n, i, rng) if rng.random() < rate else o for o in operands]
        body.append(Instruction(op, tuple(operands)))
    return Program(program.arity, program.out_count, w, constants, tuple(body))


def mutate(individual: Individual, rate: float, opcodes: Sequence[Opcode], rng: random.Random) -> Individual:
    if rate == 0:
        return individual
    return Individual({name: mutate_program(p, rate, opcodes, rng) for name, p in individual.witnesses.items()})


def evolve_step(population: Population, instance: SynthesisInstance, inputs: Sequence[Assignment],
                config: GpConfig, rng: random.Random, opcodes: Sequence[Opcode]) -> Population:
    """One generation in place: elites survive, the rest are bred by selection."""
    width = population.width
    for ind in population.individuals:
        fitness(ind, instance, inputs, width)
    ranked = sorted(population.individuals, key=lambda i: -i.cached_fitness)
    nxt = ranked[:config.elite]
    while len(nxt) < population.capacity:
        parent = select(population, rng, config.tournament)
        if rng.random() < config.crossover:
            child = crossover(parent, select(population, rng, config.tournament), rng)
        else:
            child = Individual(dict(parent.witnesses), parent.cached_fitness)
        child = mutate(child, config.mutation, opcodes, rng)
        nxt.append(child)
    population.individuals = nxt
    population.generation += 1
    for ind in population.individuals:
        fitness(ind, instance, inputs, width)
    return population


class GpStrategy(SynthesisStrategy):
    """Incomplete search: never reports exhaustion."""

    name = "gp"
    complete = False

    def __init__(self, config: Optional[GpConfig] = None, seed: int = 0):
        self.config = config or GpConfig()
        self.rng = random.Random(seed)
        self.seed = seed
        self.population: Optional[Population] = None
        self.request: Optional[SynthRequest] = None
        self._cancelled = False

    def _seed_population(self, request: SynthRequest) -> None:
        splits = request.splits()
        population = Population(self.config.population, width=request.width)
        if splits:
            for _ in range(self.config.population):
                split = self.rng.choice(splits)
                population.individuals.append(random_individual(
                    request.instance, split, request.width, request.opcodes, self.config.length_slack, self.rng))
        self.population = population
        logger.debug(f"Seeded GP population of {len(population.individuals)} at width {request.width}")

    def begin(self, request: SynthRequest) -> None:
        self.request = request
        self._cancelled = False
        population = self.population
        if population is None or population.width != request.width or not population.individuals:
            self._seed_population(request)
            population = self.population
        if population.input_count != len(request.inputs):
            population.invalidate()
            population.input_count = len(request.inputs)

    def _accepted(self) -> Optional[Candidate]:
        request = self.request
        target = len(request.inputs)
        for ind in self.population.individuals:
            if fitness(ind, request.instance, request.inputs, request.width) != target:
                continue
            witnesses = {name: canonicalize(p) for name, p in ind.witnesses.items()}
            if sum(p.length for p in witnesses.values()) <= request.length:
                return Candidate(witnesses, self.name, request.params)
        return None

    def step(self, budget: Optional[int] = None) -> StepResult:
        request = self.request
        if not self.population.individuals:
            return StepResult(StepStatus.GAVE_UP, reason="no program shape fits the current length")
        generations = budget if budget is not None else self.config.generations_per_turn
        found = self._accepted()
        for _ in range(generations):
            if found or self._cancelled:
                break
            evolve_step(self.population, request.instance, request.inputs, self.config, self.rng, request.opcodes)
            found = self._accepted()
        if found:
            logger.debug(f"GP accepted a candidate at generation {self.population.generation}")
            return StepResult(StepStatus.FOUND, found)
        best = self.population.best()
        if best is not None:
            logger.debug(f"GP generation {self.population.generation}: best fitness {best.cached_fitness}/{len(request.inputs)}")
        return StepResult(StepStatus.PENDING)

    def cancel(self) -> None:
        self._cancelled = True
