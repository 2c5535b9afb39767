import random
from collections import Counter

import pytest

from cegis.types import GpConfig
from lang.machine import exec_program
from lang.opcodes import INTEGER_OPCODES, Opcode
from lang.program import Instruction, Operand, Program, is_canonical
from synthesis.base import StepStatus, SynthRequest
from synthesis.gp import (
    GpStrategy,
    Individual,
    Population,
    crossover,
    crossover_programs,
    evolve_step,
    fitness,
    mutate,
    mutate_program,
    random_program,
    repair,
    select,
)

INPUTS = tuple({"x": x} for x in range(16))


def small_config(**overrides):
    return GpConfig(**{"population": 40, "elite": 2, "generations_per_turn": 3, **overrides})


def clear_lowest_bit_program(width=4):
    return Program(1, 1, width, (1,), (
        Instruction(Opcode.SUB, (Operand.input(0), Operand.const(0))),
        Instruction(Opcode.AND, (Operand.input(0), Operand.temp(0))),
    ))


def scored(*values):
    population = Population(len(values), width=4)
    for k, value in enumerate(values):
        program = Program(1, 1, 4, (k,), (Instruction(Opcode.ADD, (Operand.const(0), Operand.input(0))),))
        population.individuals.append(Individual({"P": program}, cached_fitness=value))
    return population


def seeded_population(instance, inputs, config, seed, length=2, const_count=1):
    strategy = GpStrategy(config, seed=seed)
    request = SynthRequest(instance, inputs, length, const_count, instance.width)
    strategy.begin(request)
    for ind in strategy.population.individuals:
        fitness(ind, instance, inputs, request.width)
    return strategy.population, strategy.rng, request.opcodes


class TestSelection:

    @staticmethod
    def test_population_of_one():
        population = scored(3)
        assert select(population, random.Random(0), 4) is population.individuals[0]

    @staticmethod
    def test_fitter_individual_always_wins():
        population = scored(5, 0)
        rng = random.Random(1)
        for _ in range(200):
            assert select(population, rng, 2) is population.individuals[0]

    @staticmethod
    def test_equal_fitness_selects_uniformly():
        population = scored(*[2] * 10)
        rng = random.Random(11)
        draws = 10_000
        counts = Counter(id(select(population, rng, 4)) for _ in range(draws))
        expected = draws / 10
        chi_square = sum((counts[id(ind)] - expected) ** 2 / expected for ind in population.individuals)
        # 9 degrees of freedom, p = 0.001
        assert chi_square < 27.88


class TestVariation:

    @staticmethod
    def test_zero_mutation_rate_returns_the_same_individual():
        ind = Individual({"P": clear_lowest_bit_program()})
        assert mutate(ind, 0.0, INTEGER_OPCODES, random.Random(0)) is ind

    @staticmethod
    def test_full_mutation_rate_still_yields_valid_programs(clear_lowest_bit):
        rng = random.Random(4)
        sig = clear_lowest_bit.signature("P")
        for _ in range(200):
            ind = Individual({"P": random_program(sig, rng.randint(1, 4), rng.randint(0, 2), 4, INTEGER_OPCODES, rng)})
            assert mutate(ind, 1.0, INTEGER_OPCODES, rng).witnesses["P"].is_valid

    @staticmethod
    def test_self_crossover_keeps_the_function():
        rng = random.Random(9)
        parent = Individual({"P": clear_lowest_bit_program()})
        for _ in range(50):
            child = crossover(parent, parent, rng).witnesses["P"]
            for x in range(16):
                assert exec_program(child, (x,)) == exec_program(parent.witnesses["P"], (x,))

    @staticmethod
    def test_cut_at_zero_takes_the_second_parent(clear_lowest_bit):
        rng = random.Random(3)
        sig = clear_lowest_bit.signature("P")
        a = random_program(sig, 3, 1, 4, INTEGER_OPCODES, rng)
        b = random_program(sig, 3, 1, 4, INTEGER_OPCODES, rng)

        class CutAtZero(random.Random):
            def randint(self, lo, hi):
                return lo

        child = crossover_programs(a, b, CutAtZero())
        assert child.body == repair(Program(1, 1, 4, a.constants, b.body)).body


class TestEvolution:

    @staticmethod
    def test_elite_survives_and_best_fitness_never_drops(clear_lowest_bit):
        inputs = INPUTS[:6]
        config = small_config()
        population, rng, opcodes = seeded_population(clear_lowest_bit, inputs, config, seed=2)
        champion = Individual({"P": clear_lowest_bit_program()})
        fitness(champion, clear_lowest_bit, inputs, 4)
        population.individuals[0] = champion
        best = population.best().cached_fitness
        assert best == len(inputs)
        for _ in range(5):
            evolve_step(population, clear_lowest_bit, inputs, config, rng, opcodes)
            assert any(ind is champion for ind in population.individuals)
            assert population.best().cached_fitness >= best
            best = population.best().cached_fitness

    @staticmethod
    def test_all_zero_population_refills_to_capacity(contradiction):
        inputs = ({"x": 0}, {"x": 1})
        config = small_config()
        population, rng, opcodes = seeded_population(contradiction, inputs, config, seed=6, length=1, const_count=0)
        assert all(ind.cached_fitness == 0 for ind in population.individuals)
        evolve_step(population, contradiction, inputs, config, rng, opcodes)
        assert len(population.individuals) == config.population
        assert all(p.is_valid for ind in population.individuals for p in ind.witnesses.values())

    @staticmethod
    @pytest.mark.slow
    def test_clear_lowest_bit_reaches_full_fitness(clear_lowest_bit):
        inputs = ({"x": 0}, {"x": 1}, {"x": 12})
        config = GpConfig()
        successes = 0
        for seed in range(20):
            population, rng, opcodes = seeded_population(clear_lowest_bit, inputs, config, seed=seed)
            for _ in range(50):
                if population.best().cached_fitness == len(inputs):
                    break
                evolve_step(population, clear_lowest_bit, inputs, config, rng, opcodes)
            if population.best().cached_fitness == len(inputs):
                successes += 1
        assert successes >= 18


class TestOperators:

    @staticmethod
    def test_random_programs_are_well_formed(clear_lowest_bit):
        rng = random.Random(1)
        sig = clear_lowest_bit.signature("P")
        for _ in range(200):
            program = random_program(sig, rng.randint(1, 5), rng.randint(0, 2), 4, INTEGER_OPCODES, rng)
            assert program.is_valid

    @staticmethod
    def test_crossover_and_mutation_keep_programs_executable(clear_lowest_bit):
        rng = random.Random(2)
        sig = clear_lowest_bit.signature("P")
        for _ in range(200):
            a = random_program(sig, rng.randint(1, 4), 1, 4, INTEGER_OPCODES, rng)
            b = random_program(sig, rng.randint(1, 4), 1, 4, INTEGER_OPCODES, rng)
            assert crossover_programs(a, b, rng).is_valid
            assert mutate_program(a, 0.3, INTEGER_OPCODES, rng).is_valid

    @staticmethod
    def test_repair_maps_operands_into_range():
        broken = Program(1, 1, 4, (3,), (
            Instruction(Opcode.ADD, (Operand.temp(4), Operand.input(0))),
            Instruction(Opcode.SUB, (Operand.temp(0), Operand.temp(7))),
        ))
        assert not broken.is_valid
        assert repair(broken).is_valid

    @staticmethod
    def test_fitness_counts_satisfied_inputs(clear_lowest_bit):
        exact = Program(1, 1, 4, (1,), (
            Instruction(Opcode.SUB, (Operand.input(0), Operand.const(0))),
            Instruction(Opcode.AND, (Operand.input(0), Operand.temp(0))),
        ))
        identity_ish = Program(1, 1, 4, (), (Instruction(Opcode.MIN, (Operand.input(0), Operand.input(0))),))
        assert fitness(Individual({"P": exact}), clear_lowest_bit, INPUTS, 4) == 16
        # only zero has no lowest set bit to clear
        assert fitness(Individual({"P": identity_ish}), clear_lowest_bit, INPUTS, 4) == 1
        assert fitness(Individual({"P": exact}), clear_lowest_bit, (), 4) == 0


class TestGpStrategy:

    @staticmethod
    def test_never_reports_exhaustion(contradiction):
        strategy = GpStrategy(small_config(), seed=3)
        strategy.begin(SynthRequest(contradiction, ({"x": 0},), 1, 0, 1))
        for _ in range(5):
            assert strategy.step().status is StepStatus.PENDING
        assert not strategy.complete

    @staticmethod
    def test_same_seed_same_population(clear_lowest_bit):
        def evolve(seed):
            strategy = GpStrategy(small_config(), seed=seed)
            strategy.begin(SynthRequest(clear_lowest_bit, INPUTS[:4], 2, 1, 4))
            strategy.step(4)
            return [sorted((n, str(p)) for n, p in ind.witnesses.items()) for ind in strategy.population.individuals]

        assert evolve(7) == evolve(7)

    @staticmethod
    def test_population_survives_new_inputs(clear_lowest_bit):
        strategy = GpStrategy(small_config(), seed=5)
        strategy.begin(SynthRequest(clear_lowest_bit, INPUTS[:2], 2, 1, 4))
        strategy.step(2)
        population = strategy.population
        generation = population.generation
        strategy.begin(SynthRequest(clear_lowest_bit, INPUTS[:3], 2, 1, 4))
        assert strategy.population is population
        assert population.generation == generation
        assert population.input_count == 3

    @staticmethod
    def test_vacuous_inputs_accept_a_short_enough_program(clear_lowest_bit):
        strategy = GpStrategy(small_config(length_slack=0), seed=0)
        strategy.begin(SynthRequest(clear_lowest_bit, (), 2, 1, 4))
        result = strategy.step()
        assert result.status is StepStatus.FOUND
        program = result.candidate.witnesses["P"]
        assert program.length <= 2
        assert is_canonical(program)
        assert result.candidate.origin == "gp"
