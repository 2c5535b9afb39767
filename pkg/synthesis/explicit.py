"""Exhaustive, length-ordered enumeration of canonical programs."""

import itertools
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from cegis.types import Candidate
from formula.ast import Assignment, SynthesisInstance
from lang.opcodes import Opcode
from lang.program import Instruction, Operand, Program, instruction_is_canonical
from synthesis.base import (
    Shape,
    StepResult,
    StepStatus,
    SynthesisStrategy,
    SynthRequest,
    constant_functions,
    constant_tables,
    satisfies,
    word_tuples,
)
from utils.logger import setup_logger

logger = setup_logger("synthesis.explicit")


def _sources(arity: int, const_count: int, position: int) -> List[Operand]:
    """Operands available to instruction `position`, in the fixed operand order."""
    return (
        [Operand.const(k) for k in range(const_count)]
        + [Operand.input(i) for i in range(arity)]
        + [Operand.temp(j) for j in range(position)]
    )


def instruction_choices(arity: int, table: Sequence[int], position: int, width: int,
                        opcodes: Sequence[Opcode]) -> List[Instruction]:
    sources = _sources(arity, len(table), position)
    out = []
    for opcode in opcodes:
        for operands in itertools.product(sources, repeat=opcode.arity):
            instr = Instruction(opcode, operands)
            if instruction_is_canonical(instr, table, width):
                out.append(instr)
    return out


def enumerate_programs(arity: int, out_count: int, length: int, const_count: int, width: int,
                       opcodes: Sequence[Opcode]) -> Iterator[Program]:
    """Every canonical program of exactly this shape, once each."""
    if length < max(1, out_count) or const_count > length:
        return
    for table in constant_tables(width, const_count):
        choices = [instruction_choices(arity, table, i, width, opcodes) for i in range(length)]
        for body in itertools.product(*choices):
            yield Program(arity, out_count, width, table, body)


def enumerate_witnesses(instance: SynthesisInstance, split: Tuple[Shape, ...], width: int,
                        opcodes: Sequence[Opcode]) -> Iterator[Dict[str, Program]]:
    """Witness maps for one split: programs for each shape, constants for arity-0 symbols."""
    parts = []
    for shape in split:
        sig = instance.signature(shape.name)
        parts.append((sig.name, lambda sig=sig, shape=shape: enumerate_programs(
            sig.arity, sig.out_count, shape.length, shape.const_count, width, opcodes)))
    for sig in constant_functions(instance):
        parts.append((sig.name, lambda sig=sig: (
            Program(0, sig.out_count, width, values, ()) for values in word_tuples(width, sig.out_count))))

    def product(index: int, chosen: Dict[str, Program]) -> Iterator[Dict[str, Program]]:
        if index == len(parts):
            yield dict(chosen)
            return
        name, factory = parts[index]
        for program in factory():
            chosen[name] = program
            yield from product(index + 1, chosen)
        chosen.pop(name, None)

    return product(0, {})


class EnumCursor:
    """Resumable position in the enumeration of one (l, w, c) search space.

    A cursor built with `stride` K and `offset` k yields only the positions
    congruent to k mod K, so K cursors partition the space.
    """

    def __init__(self, instance: SynthesisInstance, length: int, const_count: int, width: int,
                 opcodes: Sequence[Opcode], splits: Iterable[Tuple[Shape, ...]],
                 stride: int = 1, offset: int = 0):
        self.params = (length, width, const_count, instance.label)
        self.position = 0
        self.stride = stride
        self.offset = offset
        self._stream = itertools.chain.from_iterable(
            enumerate_witnesses(instance, split, width, opcodes) for split in splits
        )

    def __iter__(self):
        return self

    def __next__(self) -> Dict[str, Program]:
        while True:
            witnesses = next(self._stream)
            index = self.position
            self.position += 1
            if index % self.stride == self.offset:
                return witnesses


def filter_on_inputs(stream: Iterable[Dict[str, Program]], instance: SynthesisInstance,
                     inputs: Sequence[Assignment], width: int) -> Optional[Dict[str, Program]]:
    """First witness map in the stream satisfying the body on every input."""
    for witnesses in stream:
        if satisfies(instance, witnesses, inputs, width):
            return witnesses
    return None


class ExplicitStrategy(SynthesisStrategy):
    name = "explicit"
    complete = True

    def __init__(self, stride: int = 1, offset: int = 0):
        self.stride = stride
        self.offset = offset
        self.request: Optional[SynthRequest] = None
        self.cursor: Optional[EnumCursor] = None
        self.examined = 0

    def begin(self, request: SynthRequest) -> None:
        self.request = request
        self.examined = 0
        self.cursor = EnumCursor(
            request.instance, request.length, request.const_count, request.width,
            request.opcodes, request.splits(), self.stride, self.offset,
        )

    def step(self, budget: Optional[int] = None) -> StepResult:
        request = self.request
        steps = 0
        while budget is None or steps < budget:
            try:
                witnesses = next(self.cursor)
            except StopIteration:
                logger.debug(f"Enumeration exhausted after {self.examined} candidates at {request.params}")
                return StepResult(StepStatus.EXHAUSTED)
            steps += 1
            self.examined += 1
            if satisfies(request.instance, witnesses, request.inputs, request.width):
                return StepResult(StepStatus.FOUND, Candidate(witnesses, self.name, request.params))
        return StepResult(StepStatus.PENDING)
