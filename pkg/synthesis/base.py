"""Strategy interface shared by the explicit, symbolic and genetic searches."""

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Mapping, Optional, Sequence, Tuple

from cegis.types import Candidate
from formula.ast import Assignment, FunctionSignature, SynthesisInstance
from formula.evaluate import evaluate_body
from lang.opcodes import Opcode, search_opcodes
from lang.program import Program


@dataclass(frozen=True)
class Shape:
    """Instruction and constant budget of one witness program."""

    name: str
    length: int
    const_count: int


def program_functions(instance: SynthesisInstance) -> List[FunctionSignature]:
    """Symbols that are synthesised as instruction lists (arity > 0)."""
    return [f for f in instance.functions if f.arity > 0]


def constant_functions(instance: SynthesisInstance) -> List[FunctionSignature]:
    """Arity-0 symbols, synthesised as constant tables."""
    return [f for f in instance.functions if f.arity == 0]


def _compositions(total: int, parts: int, minimums: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    low = minimums[0]
    rest_min = sum(minimums[1:])
    for first in range(low, total - rest_min + 1):
        for rest in _compositions(total - first, parts - 1, minimums[1:]):
            yield (first,) + rest


def shape_splits(instance: SynthesisInstance, length: int, const_count: int) -> List[Tuple[Shape, ...]]:
    """Every way to share (length, const_count) among the program symbols.

    Each program gets at least out_count instructions and at most as many
    constants as instructions. With no program symbols the only split is the
    empty one, at every length.
    """
    functions = program_functions(instance)
    if not functions:
        return [()]
    minimums = [f.out_count for f in functions]
    splits = []
    for lengths in _compositions(length, len(functions), minimums):
        for consts in _compositions(const_count, len(functions), [0] * len(functions)):
            if all(c <= l for c, l in zip(consts, lengths)):
                splits.append(tuple(Shape(f.name, l, c) for f, l, c in zip(functions, lengths, consts)))
    return splits


@dataclass(frozen=True)
class SynthRequest:
    """Immutable snapshot handed to a strategy for one synthesis call."""

    instance: SynthesisInstance
    inputs: Tuple[Assignment, ...]
    length: int
    const_count: int
    width: int
    enable_float: bool = False

    @property
    def opcodes(self) -> Tuple[Opcode, ...]:
        return search_opcodes(self.width, enable_shl=self.instance.enable_shl, enable_float=self.enable_float)

    @property
    def params(self) -> Tuple[int, int, int]:
        return (self.length, self.width, self.const_count)

    def splits(self) -> List[Tuple[Shape, ...]]:
        return shape_splits(self.instance, self.length, self.const_count)


def satisfies(instance: SynthesisInstance, witnesses: Mapping[str, Program], inputs: Sequence[Assignment],
              width: int) -> bool:
    return all(evaluate_body(instance.body, a, witnesses, width) for a in inputs)


class StepStatus(str, Enum):
    FOUND = "found"
    EXHAUSTED = "exhausted"
    PENDING = "pending"
    GAVE_UP = "gave-up"


@dataclass
class StepResult:
    status: StepStatus
    candidate: Optional[Candidate] = None
    reason: str = ""


class SynthesisStrategy:
    """A resumable candidate search.

    `begin` loads a request, then each `step` spends at most `budget` units of
    work (None means unbounded). Only complete strategies may report EXHAUSTED.
    """

    name = ""
    complete = True

    def begin(self, request: SynthRequest) -> None:
        raise NotImplementedError

    def step(self, budget: Optional[int] = None) -> StepResult:
        raise NotImplementedError

    def cancel(self) -> None:
        pass

    def close(self) -> None:
        pass


def constant_order(width: int) -> Iterator[int]:
    """Every w-bit word once: 0, 1, all-ones, sign bit, then the rest ascending."""
    m = (1 << width) - 1
    front = []
    for v in (0, 1, m, 1 << (width - 1)):
        if v not in front:
            front.append(v)
    yield from front
    for v in range(1 << width):
        if v not in front:
            yield v


def constant_tables(width: int, count: int, used: Tuple[int, ...] = ()) -> Iterator[Tuple[int, ...]]:
    """All tables of `count` pairwise distinct words, lazily, common constants first."""
    if count == 0:
        yield ()
        return
    for v in constant_order(width):
        if v in used:
            continue
        for rest in constant_tables(width, count - 1, used + (v,)):
            yield (v,) + rest


def word_tuples(width: int, count: int) -> Iterator[Tuple[int, ...]]:
    """All `count`-tuples of words (repeats allowed), lazily."""
    if count == 0:
        yield ()
        return
    for v in constant_order(width):
        for rest in word_tuples(width, count - 1):
            yield (v,) + rest
