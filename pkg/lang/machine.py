"""Bit-exact semantics of the L-machine at any word width."""

from typing import Sequence, Tuple

import numpy as np

from config import FLOAT_WIDTH
from lang.opcodes import Opcode, OperandKind
from utils.errors import MalformedProgram, UnsupportedWidth


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(value: int, width: int) -> int:
    if value >> (width - 1) & 1:
        return value - (1 << width)
    return value


def from_signed(value: int, width: int) -> int:
    return value & mask(width)


def sdiv(a: int, b: int, width: int) -> int:
    """Signed division truncating toward zero; x / 0 is all-ones."""
    if b == 0:
        return mask(width)
    sa, sb = to_signed(a, width), to_signed(b, width)
    q = abs(sa) // abs(sb)
    if (sa < 0) != (sb < 0):
        q = -q
    return from_signed(q, width)


def smod(a: int, b: int, width: int) -> int:
    """Remainder of sdiv, sign follows the dividend; x mod 0 is x."""
    if b == 0:
        return a
    sa, sb = to_signed(a, width), to_signed(b, width)
    r = abs(sa) % abs(sb)
    if sa < 0:
        r = -r
    return from_signed(r, width)


def _float_op(opcode: Opcode, a: int, b: int) -> int:
    fa, fb = np.array([a, b], dtype=np.uint32).view(np.float32)
    with np.errstate(all="ignore"):
        if opcode is Opcode.FADD:
            r = fa + fb
        elif opcode is Opcode.FSUB:
            r = fa - fb
        elif opcode is Opcode.FMUL:
            r = fa * fb
        else:
            r = fa / fb
    return int(np.array([r], dtype=np.float32).view(np.uint32)[0])


def eval_instruction(opcode: Opcode, args: Sequence[int], width: int) -> int:
    """Result word of one instruction; arithmetic wraps modulo 2^width."""
    if len(args) != opcode.arity:
        raise ValueError(f"{opcode} takes {opcode.arity} operands, got {len(args)}")
    m = mask(width)
    if opcode.is_float:
        if width != FLOAT_WIDTH:
            raise UnsupportedWidth(f"{opcode} is only defined at width {FLOAT_WIDTH}, not {width}")
        return _float_op(opcode, args[0], args[1])

    a = args[0]
    if opcode is Opcode.NEG:
        return -a & m
    if opcode is Opcode.NOT:
        return ~a & m
    b = args[1]
    if opcode is Opcode.ADD:
        return (a + b) & m
    if opcode is Opcode.SUB:
        return (a - b) & m
    if opcode is Opcode.MUL:
        return (a * b) & m
    if opcode is Opcode.DIV:
        return sdiv(a, b, width)
    if opcode is Opcode.MOD:
        return smod(a, b, width)
    if opcode is Opcode.MIN:
        return a if to_signed(a, width) <= to_signed(b, width) else b
    if opcode is Opcode.MAX:
        return a if to_signed(a, width) >= to_signed(b, width) else b
    if opcode is Opcode.AND:
        return a & b
    if opcode is Opcode.OR:
        return a | b
    if opcode is Opcode.XOR:
        return a ^ b
    if opcode is Opcode.LSHR:
        return a >> (b % width)
    if opcode is Opcode.ASHR:
        return from_signed(to_signed(a, width) >> (b % width), width)
    if opcode is Opcode.SHL:
        return (a << (b % width)) & m
    if opcode is Opcode.LE:
        return int(a <= b)
    if opcode is Opcode.LT:
        return int(a < b)
    if opcode is Opcode.SLE:
        return int(to_signed(a, width) <= to_signed(b, width))
    if opcode is Opcode.SLT:
        return int(to_signed(a, width) < to_signed(b, width))
    if opcode is Opcode.EQ:
        return int(a == b)
    if opcode is Opcode.NEQ:
        return int(a != b)
    if opcode is Opcode.IMPLIES:
        return int(not (a != 0 and b == 0))
    if opcode is Opcode.ITE:
        return b if a != 0 else args[2]
    raise ValueError(f"Unknown opcode: {opcode}")


def exec_program(program, inputs: Sequence[int]) -> Tuple[int, ...]:
    """Run a program on one input tuple; total, exactly len(body) steps."""
    if not program.is_valid:
        raise MalformedProgram(program.violations)
    if len(inputs) != program.arity:
        raise ValueError(f"Program takes {program.arity} inputs, got {len(inputs)}")
    width = program.width
    m = mask(width)
    if not program.body:
        return tuple(program.constants[:program.out_count])

    consts = program.constants
    temps = []
    for instr in program.body:
        args = []
        for operand in instr.operands:
            kind = operand.kind
            if kind is OperandKind.CONST:
                args.append(consts[operand.index])
            elif kind is OperandKind.INPUT:
                args.append(inputs[operand.index] & m)
            else:
                args.append(temps[operand.index])
        temps.append(eval_instruction(instr.opcode, args, width))
    return tuple(temps[-program.out_count:])
