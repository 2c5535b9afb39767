from enum import Enum, IntEnum
from typing import FrozenSet, Tuple

from config import FLOAT_WIDTH


class Opcode(str, Enum):
    """Instruction set of the L-machine."""

    # Integer arithmetic
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    NEG = "neg"
    MOD = "mod"
    MIN = "min"
    MAX = "max"
    # Bitwise logical and shift
    AND = "and"
    OR = "or"
    XOR = "xor"
    LSHR = "lshr"
    ASHR = "ashr"
    NOT = "not"
    # Unsigned and signed comparison
    LE = "le"
    LT = "lt"
    SLE = "sle"
    SLT = "slt"
    EQ = "eq"
    NEQ = "neq"
    # Miscellaneous logical
    IMPLIES = "implies"
    ITE = "ite"
    # Floating point (binary32 only)
    FADD = "fadd"
    FSUB = "fsub"
    FMUL = "fmul"
    FDIV = "fdiv"
    # Extension, off unless enabled
    SHL = "shl"

    @property
    def arity(self) -> int:
        if self in UNARY:
            return 1
        if self is Opcode.ITE:
            return 3
        return 2

    @property
    def is_boolean(self) -> bool:
        return self in BOOLEAN

    @property
    def is_commutative(self) -> bool:
        return self in COMMUTATIVE

    @property
    def is_float(self) -> bool:
        return self in FLOAT

    def __str__(self) -> str:
        return self.value


UNARY: FrozenSet[Opcode] = frozenset({Opcode.NEG, Opcode.NOT})
BOOLEAN: FrozenSet[Opcode] = frozenset({
    Opcode.LE, Opcode.LT, Opcode.SLE, Opcode.SLT, Opcode.EQ, Opcode.NEQ, Opcode.IMPLIES,
})
COMMUTATIVE: FrozenSet[Opcode] = frozenset({
    Opcode.ADD, Opcode.MUL, Opcode.AND, Opcode.OR, Opcode.XOR, Opcode.EQ, Opcode.NEQ,
    Opcode.MIN, Opcode.MAX, Opcode.FADD, Opcode.FMUL,
})
FLOAT: FrozenSet[Opcode] = frozenset({Opcode.FADD, Opcode.FSUB, Opcode.FMUL, Opcode.FDIV})
EXTENSIONS: FrozenSet[Opcode] = frozenset({Opcode.SHL})

# Base instruction set, in declaration order
CORE_OPCODES: Tuple[Opcode, ...] = tuple(op for op in Opcode if op not in EXTENSIONS)
INTEGER_OPCODES: Tuple[Opcode, ...] = tuple(op for op in CORE_OPCODES if op not in FLOAT)

BY_NAME = {op.value: op for op in Opcode}


def search_opcodes(width: int, enable_shl: bool = False, enable_float: bool = False) -> Tuple[Opcode, ...]:
    """Opcodes a candidate search may use at the given width."""
    ops = list(INTEGER_OPCODES)
    if enable_float and width == FLOAT_WIDTH:
        ops.extend(op for op in CORE_OPCODES if op in FLOAT)
    if enable_shl:
        ops.append(Opcode.SHL)
    return tuple(ops)


class OperandKind(IntEnum):
    """Operand sources, numbered in the fixed total order Const < Input < Temp."""

    CONST = 0
    INPUT = 1
    TEMP = 2
