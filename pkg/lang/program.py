"""Programs of the L-machine: SSA instruction lists over a constant table."""

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from config import FLOAT_WIDTH, MAX_WORD_WIDTH
from lang.machine import eval_instruction, mask
from lang.opcodes import Opcode, OperandKind
from utils.errors import MalformedProgram


@dataclass(frozen=True, order=True)
class Operand:
    kind: OperandKind
    index: int

    @staticmethod
    def const(index: int) -> "Operand":
        return Operand(OperandKind.CONST, index)

    @staticmethod
    def input(index: int) -> "Operand":
        return Operand(OperandKind.INPUT, index)

    @staticmethod
    def temp(index: int) -> "Operand":
        return Operand(OperandKind.TEMP, index)

    def __str__(self) -> str:
        if self.kind is OperandKind.CONST:
            return f"c{self.index}"
        if self.kind is OperandKind.INPUT:
            return f"x{self.index}"
        # temps print 1-based: instruction 0 defines t1
        return f"t{self.index + 1}"


@dataclass(frozen=True)
class Instruction:
    opcode: Opcode
    operands: Tuple[Operand, ...]

    def __str__(self) -> str:
        return " ".join([self.opcode.value] + [str(o) for o in self.operands])


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    instruction: Optional[int] = None

    def __str__(self) -> str:
        where = f"instruction {self.instruction}: " if self.instruction is not None else ""
        return f"{where}{self.message}"


@dataclass(frozen=True)
class Program:
    """N inputs, M outputs, w-bit words; outputs are the last M results.

    A program with an empty body is the degenerate constant form: it has no
    inputs and returns its constant table.
    """

    arity: int
    out_count: int
    width: int
    constants: Tuple[int, ...] = ()
    body: Tuple[Instruction, ...] = ()

    @property
    def length(self) -> int:
        return len(self.body)

    @cached_property
    def violations(self) -> List[Violation]:
        return validate(self)

    @cached_property
    def is_valid(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        from lang.text import pretty_print
        return pretty_print(self)


def constant_program(value: int, width: int) -> Program:
    """Degenerate arity-0 program returning one constant."""
    return Program(arity=0, out_count=1, width=width, constants=(value & mask(width),), body=())


def validate(program: Program) -> List[Violation]:
    """Every violated program/operand invariant; empty means exec is total."""
    out: List[Violation] = []
    w = program.width
    if not 1 <= w <= MAX_WORD_WIDTH:
        out.append(Violation("width", f"width {w} outside 1..{MAX_WORD_WIDTH}"))
        return out
    if program.arity < 0:
        out.append(Violation("arity", "negative arity"))
    if program.out_count < 1:
        out.append(Violation("out_count", "out_count must be at least 1"))
    for k, value in enumerate(program.constants):
        if not 0 <= value <= mask(w):
            out.append(Violation("constant-range", f"constant c{k}={value} does not fit in {w} bits"))

    if not program.body:
        if program.arity != 0:
            out.append(Violation("degenerate", "empty body requires arity 0"))
        if len(program.constants) != program.out_count:
            out.append(Violation("degenerate", "empty body requires one constant per output"))
        return out

    if len(program.body) < program.out_count:
        out.append(Violation("length", f"{len(program.body)} instructions cannot provide {program.out_count} outputs"))
    for i, instr in enumerate(program.body):
        if len(instr.operands) != instr.opcode.arity:
            out.append(Violation("operand-count", f"{instr.opcode} takes {instr.opcode.arity} operands", i))
        if instr.opcode.is_float and w != FLOAT_WIDTH:
            out.append(Violation("float-width", f"{instr.opcode} needs width {FLOAT_WIDTH}", i))
        for operand in instr.operands:
            if operand.index < 0:
                out.append(Violation("operand-index", f"negative index in {operand}", i))
            elif operand.kind is OperandKind.TEMP and operand.index >= i:
                out.append(Violation("forward-reference", f"forward/self reference {operand}", i))
            elif operand.kind is OperandKind.INPUT and operand.index >= program.arity:
                out.append(Violation("input-range", f"input index out of range {operand}", i))
            elif operand.kind is OperandKind.CONST and operand.index >= len(program.constants):
                out.append(Violation("constant-index", f"constant index out of range {operand}", i))
    return out


def is_nop(instr: Instruction, constants: Sequence[int], width: int) -> bool:
    """Fixed nop list: identities a minimal program never needs."""
    op = instr.opcode
    ops = instr.operands

    def const_is(operand: Operand, value: int) -> bool:
        return operand.kind is OperandKind.CONST and constants[operand.index] == value

    if op in (Opcode.ADD, Opcode.OR, Opcode.XOR):
        if const_is(ops[0], 0) or const_is(ops[1], 0):
            return True
    if op is Opcode.SUB and const_is(ops[1], 0):
        return True
    if op is Opcode.MUL and (const_is(ops[0], 1) or const_is(ops[1], 1)):
        return True
    if op is Opcode.DIV and const_is(ops[1], 1):
        return True
    if op in (Opcode.AND, Opcode.OR) and ops[0] == ops[1]:
        return True
    if op is Opcode.AND and (const_is(ops[0], mask(width)) or const_is(ops[1], mask(width))):
        return True
    if op is Opcode.ITE and ops[0].kind is OperandKind.CONST:
        return True
    return False


def instruction_is_canonical(instr: Instruction, constants: Sequence[int], width: int) -> bool:
    if all(o.kind is OperandKind.CONST for o in instr.operands):
        return False
    if instr.opcode.is_commutative and instr.operands[0] > instr.operands[1]:
        return False
    return not is_nop(instr, constants, width)


def is_canonical(program: Program) -> bool:
    # the degenerate form returns its table, so repeats are outputs, not waste
    if program.body and len(set(program.constants)) != len(program.constants):
        return False
    return all(instruction_is_canonical(i, program.constants, program.width) for i in program.body)


# Canonicalisation works on resolved values: ("in", i), ("const", v) or ("node", k)
_KIND_ORDER = {"const": 0, "in": 1, "node": 2}


def _forwarded(op: Opcode, vals: List[tuple], width: int) -> Optional[tuple]:
    def is_const(v, value):
        return v[0] == "const" and v[1] == value

    if op in (Opcode.ADD, Opcode.OR, Opcode.XOR):
        if is_const(vals[0], 0):
            return vals[1]
        if is_const(vals[1], 0):
            return vals[0]
    if op is Opcode.SUB and is_const(vals[1], 0):
        return vals[0]
    if op is Opcode.MUL:
        if is_const(vals[0], 1):
            return vals[1]
        if is_const(vals[1], 1):
            return vals[0]
    if op is Opcode.DIV and is_const(vals[1], 1):
        return vals[0]
    if op in (Opcode.AND, Opcode.OR) and vals[0] == vals[1]:
        return vals[0]
    if op is Opcode.AND:
        if is_const(vals[0], mask(width)):
            return vals[1]
        if is_const(vals[1], mask(width)):
            return vals[0]
    if op is Opcode.ITE and vals[0][0] == "const":
        return vals[1] if vals[0][1] != 0 else vals[2]
    return None


def _place_outputs(nodes: List[Tuple[Opcode, Tuple[tuple, ...]]], order: List[int],
                   outs: Sequence[tuple]) -> List[int]:
    """Node order whose last len(outs) entries yield the outputs.

    An output node fills its first output slot itself when every live user of
    it fills a later slot; other slots get a copy instruction.
    """
    users: Dict[int, List[int]] = {k: [] for k in order}
    for k in order:
        for v in nodes[k][1]:
            if v[0] == "node":
                users[v[1]].append(k)
    first_slot: Dict[int, int] = {}
    for j, v in enumerate(outs):
        if v[0] == "node":
            first_slot.setdefault(v[1], j)

    placeable: Dict[int, bool] = {}

    def can_place(k: int) -> bool:
        if k not in placeable:
            placeable[k] = k in first_slot and all(
                u in first_slot and first_slot[u] > first_slot[k] and can_place(u) for u in users[k]
            )
        return placeable[k]

    in_tail = {k for k in first_slot if can_place(k)}
    placed = [k for k in order if k not in in_tail]
    for j, v in enumerate(outs):
        if v[0] == "node" and v[1] in in_tail and first_slot[v[1]] == j:
            placed.append(v[1])
            continue
        if v[0] == "const":
            copy = (Opcode.ITE, (("in", 0), v, v))
        else:
            copy = (Opcode.MIN, (v, v))
        nodes.append(copy)
        placed.append(len(nodes) - 1)
    return placed


def canonicalize(program: Program) -> Program:
    """Equivalent canonical program, never longer than the input."""
    if not program.is_valid:
        raise MalformedProgram(program.violations)
    w = program.width
    if not program.body:
        return program

    nodes: List[Tuple[Opcode, Tuple[tuple, ...]]] = []
    seen: Dict[Tuple[Opcode, Tuple[tuple, ...]], int] = {}
    resolved: List[tuple] = []

    def resolve(operand: Operand) -> tuple:
        if operand.kind is OperandKind.CONST:
            return ("const", program.constants[operand.index])
        if operand.kind is OperandKind.INPUT:
            return ("in", operand.index)
        return resolved[operand.index]

    def sort_key(v: tuple) -> tuple:
        return (_KIND_ORDER[v[0]], v[1])

    def add_node(op: Opcode, vals: Tuple[tuple, ...]) -> tuple:
        if op.is_commutative:
            vals = tuple(sorted(vals, key=sort_key))
        key = (op, vals)
        if key not in seen:
            seen[key] = len(nodes)
            nodes.append(key)
        return ("node", seen[key])

    for instr in program.body:
        vals = [resolve(o) for o in instr.operands]
        if all(v[0] == "const" for v in vals):
            resolved.append(("const", eval_instruction(instr.opcode, [v[1] for v in vals], w)))
            continue
        forward = _forwarded(instr.opcode, vals, w)
        if forward is not None:
            resolved.append(forward)
            continue
        resolved.append(add_node(instr.opcode, tuple(vals)))

    outs = resolved[-program.out_count:]
    if program.arity == 0:
        # every value folds to a constant
        return Program(0, program.out_count, w, tuple(v[1] for v in outs), ())

    # reachability from the outputs
    live = set()
    stack = [v[1] for v in outs if v[0] == "node"]
    while stack:
        k = stack.pop()
        if k in live:
            continue
        live.add(k)
        stack.extend(v[1] for v in nodes[k][1] if v[0] == "node")
    order = [k for k in range(len(nodes)) if k in live]

    if [("node", k) for k in order[-len(outs):]] != list(outs) or len(order) < len(outs):
        order = _place_outputs(nodes, order, outs)

    # constant table in order of first use
    table: List[int] = []
    for k in order:
        for v in nodes[k][1]:
            if v[0] == "const" and v[1] not in table:
                table.append(v[1])

    position = {k: i for i, k in enumerate(order)}

    def to_operand(v: tuple) -> Operand:
        if v[0] == "const":
            return Operand.const(table.index(v[1]))
        if v[0] == "in":
            return Operand.input(v[1])
        return Operand.temp(position[v[1]])

    body = []
    for k in order:
        op, vals = nodes[k]
        operands = tuple(to_operand(v) for v in vals)
        if op.is_commutative:
            operands = tuple(sorted(operands))
        body.append(Instruction(op, operands))
    return Program(program.arity, program.out_count, w, tuple(table), tuple(body))


def lookup_program(arity: int, width: int, table: Callable[[Tuple[int, ...]], int]) -> Program:
    """eq/ite table-lookup program computing any total function of `arity` words."""
    if arity == 0:
        return constant_program(table(()), width)
    domain = list(itertools.product(range(1 << width), repeat=arity))
    consts: List[int] = []

    def const(value: int) -> Operand:
        value &= mask(width)
        if value not in consts:
            consts.append(value)
        return Operand.const(consts.index(value))

    body: List[Instruction] = []
    otherwise = const(table(domain[0]))
    for point in domain[1:]:
        tests = []
        for i, value in enumerate(point):
            body.append(Instruction(Opcode.EQ, (Operand.input(i), const(value))))
            tests.append(Operand.temp(len(body) - 1))
        # nested ites: every coordinate must match before the table value is taken
        result = const(table(point))
        for test in reversed(tests):
            body.append(Instruction(Opcode.ITE, (test, result, otherwise)))
            result = Operand.temp(len(body) - 1)
        otherwise = result
    return Program(arity, 1, width, tuple(consts), tuple(body))


def with_width(program: Program, width: int, constants: Optional[Sequence[int]] = None) -> Program:
    """Same instructions on a machine of another width."""
    values = tuple(constants) if constants is not None else tuple(c & mask(width) for c in program.constants)
    return Program(program.arity, program.out_count, width, values, program.body)
