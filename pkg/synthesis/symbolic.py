"""Candidate search as propositional satisfiability.

A program of fixed shape becomes a skeleton of selector variables: one-hot
opcode selectors and binary operand selectors indexing the sources in the
order constants, inputs, earlier temps. Every stored input instantiates the
skeleton once per application in the body.
"""

import os
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from pysat.card import CardEnc, EncType
from pysat.formula import CNF

from cegis.types import Candidate
from config import CLAUSE_CEILING, DISABLE_WIDE_DIV, DIV_WIDTH_THRESHOLD
from formula.ast import Assignment, BodyExpr, FunctionSignature, SynthesisInstance
from lang.machine import mask
from lang.opcodes import Opcode
from lang.program import Instruction, Operand, Program, is_canonical
from synthesis.base import (
    Shape,
    StepResult,
    StepStatus,
    SynthesisStrategy,
    SynthRequest,
    constant_functions,
    satisfies,
)
from synthesis.bitblast import CircuitBuilder, Word, blast_expr, word_value
from synthesis.sat_backend import SatBackend, SatSession, write_dimacs
from utils.errors import BackendTimeout, BackendUnavailable, CapacityError, DecodeMismatch
from utils.logger import setup_logger

logger = setup_logger("synthesis.symbolic")

_ZERO_NOPS = (Opcode.ADD, Opcode.OR, Opcode.XOR)


@dataclass
class FunctionSkeleton:
    sig: FunctionSignature
    width: int
    length: int
    const_words: List[Word]
    opcodes: Tuple[Opcode, ...] = ()
    opcode_sel: List[Dict[Opcode, int]] = field(default_factory=list)
    operand_sel: List[List[Word]] = field(default_factory=list)


ProgramSkeletonVars = Dict[str, FunctionSkeleton]


def symbolic_opcodes(opcodes: Sequence[Opcode], width: int) -> Tuple[Opcode, ...]:
    ops = [op for op in opcodes if not op.is_float]
    if DISABLE_WIDE_DIV and width > DIV_WIDTH_THRESHOLD:
        ops = [op for op in ops if op not in (Opcode.DIV, Opcode.MOD)]
    return tuple(ops)


class SynthEncoder:
    """Builds the CNF for one split at one width."""

    def __init__(self, instance: SynthesisInstance, split: Tuple[Shape, ...], width: int,
                 opcodes: Sequence[Opcode], clause_ceiling: int = CLAUSE_CEILING):
        self.instance = instance
        self.width = width
        self.opcodes = symbolic_opcodes(opcodes, width)
        self.clause_ceiling = clause_ceiling
        self.b = CircuitBuilder()
        self.skeleton: ProgramSkeletonVars = {}
        for shape in split:
            self.skeleton[shape.name] = self._program_skeleton(instance.signature(shape.name), shape)
        for sig in constant_functions(instance):
            words = [self.b.new_word(width, ("const", sig.name, k)) for k in range(sig.out_count)]
            self.skeleton[sig.name] = FunctionSkeleton(sig, width, 0, words)

    # selectors

    def _lt_const(self, sel: Word, k: int) -> int:
        if k >= 1 << len(sel):
            return self.b.TRUE
        if k == 0:
            return self.b.FALSE
        return self.b.ult(sel, self.b.const_word(k, len(sel)))

    def _eq_const(self, sel: Word, k: int) -> int:
        if k >= 1 << len(sel):
            return self.b.FALSE
        return self.b.eq(sel, self.b.const_word(k, len(sel)))

    def _slot_const_is(self, skel: FunctionSkeleton, sel: Word, value: int) -> int:
        b = self.b
        target = b.const_word(value, self.width)
        return b.or_many([
            b.and2(self._eq_const(sel, k), b.eq(word, target)) for k, word in enumerate(skel.const_words)
        ])

    def _program_skeleton(self, sig: FunctionSignature, shape: Shape) -> FunctionSkeleton:
        b = self.b
        w = self.width
        c = shape.const_count
        skel = FunctionSkeleton(
            sig, w, shape.length,
            [b.new_word(w, ("const", sig.name, k)) for k in range(c)],
            self.opcodes,
        )
        for a in range(c):
            for d in range(a + 1, c):
                b.assert_true(-b.eq(skel.const_words[a], skel.const_words[d]))

        for i in range(shape.length):
            sources = c + sig.arity + i
            bits = (sources - 1).bit_length()
            ops = {op: b.pool.id(("op", sig.name, i, op.value)) for op in self.opcodes}
            one_hot = CardEnc.equals(lits=list(ops.values()), bound=1, vpool=b.pool, encoding=EncType.seqcounter)
            b.cnf.extend(one_hot.clauses)
            sels = [b.new_word(bits, ("sel", sig.name, i, j)) for j in range(3)]
            for sel in sels:
                b.assert_true(self._lt_const(sel, sources))

            for op, lit in ops.items():
                for j in range(op.arity, 3):
                    for bit in sels[j]:
                        b.clause([-lit, -bit])
                b.clause([-lit] + [-self._lt_const(sels[j], c) for j in range(op.arity)])
                if op.is_commutative:
                    b.clause([-lit, b.ule(sels[0], sels[1])])
                for j, value in self._nop_constants(op, w):
                    b.clause([-lit, -self._slot_const_is(skel, sels[j], value)])
                if op in (Opcode.AND, Opcode.OR):
                    b.clause([-lit, -b.eq(sels[0], sels[1])])
                if op is Opcode.ITE:
                    b.clause([-lit, -self._lt_const(sels[0], c)])
            skel.opcode_sel.append(ops)
            skel.operand_sel.append(sels)
        return skel

    @staticmethod
    def _nop_constants(op: Opcode, width: int) -> List[Tuple[int, int]]:
        """(slot, constant) pairs that make `op` a listed nop."""
        if op in _ZERO_NOPS:
            return [(0, 0), (1, 0)]
        if op is Opcode.SUB:
            return [(1, 0)]
        if op is Opcode.MUL:
            return [(0, 1), (1, 1)]
        if op is Opcode.DIV:
            return [(1, 1)]
        if op is Opcode.AND:
            return [(0, mask(width)), (1, mask(width))]
        return []

    # semantics

    def instantiate(self, name: str, args: Sequence[Word]) -> List[Word]:
        """Output words of the skeleton program on argument words."""
        skel = self.skeleton[name]
        b = self.b
        if not skel.opcode_sel:
            return skel.const_words
        options = list(skel.const_words) + list(args)
        temps: List[Word] = []
        for ops, sels in zip(skel.opcode_sel, skel.operand_sel):
            pool = options + temps
            operands = [b.select(sel, pool) for sel in sels]
            result = b.const_word(0, self.width)
            for op, lit in ops.items():
                result = b.mux_word(lit, b.apply(op, operands[:op.arity]), result)
            temps.append(result)
        return temps[-skel.sig.out_count:]

    def expr(self, node: BodyExpr, env: Mapping[str, Word], cache: Dict) -> Word:
        return blast_expr(self.b, node, env, self.width, self.instantiate, cache)

    def add_input(self, assignment: Assignment) -> None:
        env = {name: self.b.const_word(value, self.width) for name, value in assignment.items()}
        truth = self.b.nonzero(self.expr(self.instance.body, env, {}))
        self.b.assert_true(truth)
        if len(self.b.cnf.clauses) > self.clause_ceiling:
            raise CapacityError(f"Encoding exceeds {self.clause_ceiling} clauses")


def encode_synth(instance: SynthesisInstance, inputs: Sequence[Assignment], split: Tuple[Shape, ...],
                 width: int, opcodes: Sequence[Opcode],
                 clause_ceiling: int = CLAUSE_CEILING) -> Tuple[CNF, ProgramSkeletonVars]:
    """CNF satisfiable iff some canonical witness tuple of this shape satisfies every input."""
    encoder = SynthEncoder(instance, split, width, opcodes, clause_ceiling)
    for assignment in inputs:
        encoder.add_input(assignment)
    if len(encoder.b.cnf.clauses) > clause_ceiling:
        raise CapacityError(f"Encoding exceeds {clause_ceiling} clauses")
    return encoder.b.cnf, encoder.skeleton


def _operand(index: int, const_count: int, arity: int) -> Operand:
    if index < const_count:
        return Operand.const(index)
    if index < const_count + arity:
        return Operand.input(index - const_count)
    return Operand.temp(index - const_count - arity)


def decode_model(model: Sequence[int], skeleton: ProgramSkeletonVars) -> Dict[str, Program]:
    true_lits = {lit for lit in model if lit > 0}
    programs = {}
    for name, skel in skeleton.items():
        consts = tuple(word_value(true_lits, word) for word in skel.const_words)
        if not skel.opcode_sel:
            programs[name] = Program(0, skel.sig.out_count, skel.width, consts, ())
            continue
        body = []
        for i, (ops, sels) in enumerate(zip(skel.opcode_sel, skel.operand_sel)):
            chosen = [op for op, lit in ops.items() if lit in true_lits]
            if len(chosen) != 1:
                raise DecodeMismatch(f"{name} instruction {i}: {len(chosen)} opcodes selected")
            op = chosen[0]
            operands = tuple(
                _operand(word_value(true_lits, sels[j]), len(consts), skel.sig.arity) for j in range(op.arity)
            )
            body.append(Instruction(op, operands))
        programs[name] = Program(skel.sig.arity, skel.sig.out_count, skel.width, consts, tuple(body))
    for name, program in programs.items():
        if not program.is_valid:
            raise DecodeMismatch(f"Decoded {name} is malformed: {program.violations}")
        if not is_canonical(program):
            raise DecodeMismatch(f"Decoded {name} is not canonical")
    return programs


def decode_checked(model: Sequence[int], skeleton: ProgramSkeletonVars, instance: SynthesisInstance,
                   inputs: Sequence[Assignment], width: int) -> Dict[str, Program]:
    programs = decode_model(model, skeleton)
    if not satisfies(instance, programs, inputs, width):
        raise DecodeMismatch("Decoded witnesses fail a stored input on re-execution")
    return programs


class SymbolicStrategy(SynthesisStrategy):
    name = "symbolic"
    complete = True

    def __init__(self, backend: Optional[SatBackend] = None, dump_dir: Optional[str] = None):
        self.backend = backend or SatBackend()
        self.dump_dir = dump_dir
        self.request: Optional[SynthRequest] = None
        self._splits: List[Tuple[Shape, ...]] = []
        self._index = 0
        self._session: Optional[SatSession] = None
        self._skeleton: Optional[ProgramSkeletonVars] = None
        self._cancelled = False
        self._restricted = False

    def begin(self, request: SynthRequest) -> None:
        self.close()
        self.request = request
        self._splits = request.splits()
        self._index = 0
        self._cancelled = False
        # exhaustion only proves absence when every opcode was encoded
        self._restricted = symbolic_opcodes(request.opcodes, request.width) != tuple(request.opcodes)

    def _open_next(self) -> None:
        request = self.request
        split = self._splits[self._index]
        cnf, self._skeleton = encode_synth(request.instance, request.inputs, split, request.width, request.opcodes)
        logger.debug(f"Encoded split {self._index} at {request.params}: {cnf.nv} vars, {len(cnf.clauses)} clauses")
        if self.dump_dir:
            os.makedirs(self.dump_dir, exist_ok=True)
            l, w, c = request.params
            path = os.path.join(self.dump_dir, f"synth-l{l}-w{w}-c{c}-s{self._index}-i{len(request.inputs)}.cnf")
            write_dimacs(cnf, path, [f"{request.instance.label} l={l} w={w} c={c} split={self._index}"])
        self._session = self.backend.open(cnf)

    def step(self, budget: Optional[int] = None) -> StepResult:
        request = self.request
        try:
            while True:
                if self._cancelled:
                    return StepResult(StepStatus.PENDING)
                if self._session is None:
                    if self._index >= len(self._splits):
                        if self._restricted:
                            return StepResult(StepStatus.GAVE_UP, reason="instruction set restricted for encoding")
                        return StepResult(StepStatus.EXHAUSTED)
                    self._open_next()
                    continue
                result = self._session.solve(budget)
                if result is None:
                    return StepResult(StepStatus.PENDING)
                if result:
                    programs = decode_checked(self._session.model(), self._skeleton, request.instance,
                                              request.inputs, request.width)
                    self._drop_session()
                    self._index += 1
                    return StepResult(StepStatus.FOUND, Candidate(programs, self.name, request.params))
                self._drop_session()
                self._index += 1
                if budget is not None:
                    return StepResult(StepStatus.PENDING)
        except (CapacityError, BackendUnavailable, BackendTimeout) as e:
            logger.warning(f"Symbolic search gave up at {request.params}: {str(e)}")
            self._drop_session()
            return StepResult(StepStatus.GAVE_UP, reason=str(e))

    def _drop_session(self) -> None:
        if self._session is not None:
            self._session.close()
            self._session = None

    def cancel(self) -> None:
        self._cancelled = True
        if self._session is not None:
            self._session.interrupt()

    def close(self) -> None:
        self._drop_session()
