"""Second-order formulas: signatures, prefixes and quantifier-free bodies."""

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from lang.opcodes import Opcode, OperandKind
from lang.program import Program

BOOL_CONNECTIVES = ("band", "bor", "bnot", "bimplies", "biff")
FORALL = "forall"
EXISTS = "exists"
PREDICATE = "predicate"
FUNCTION = "function"


@dataclass(frozen=True)
class Lit:
    value: int


@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Op:
    opcode: Opcode
    args: Tuple["BodyExpr", ...]


@dataclass(frozen=True)
class BoolOp:
    op: str
    args: Tuple["BodyExpr", ...]


@dataclass(frozen=True)
class App:
    symbol: str
    args: Tuple["BodyExpr", ...]
    projection: int = 0


BodyExpr = Union[Lit, BoolConst, Var, Op, BoolOp, App]


@dataclass(frozen=True)
class FunctionSignature:
    name: str
    arity: int
    out_count: int = 1
    role: str = FUNCTION
    # declared result width; None means the formula width
    width: Optional[int] = None

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError(f"Negative arity for {self.name}")
        if self.out_count < 1:
            raise ValueError(f"{self.name} needs at least one output")
        if self.role == PREDICATE and self.out_count != 1:
            raise ValueError(f"Predicate {self.name} must have exactly one output")
        if self.role not in (PREDICATE, FUNCTION):
            raise ValueError(f"Unknown role '{self.role}' for {self.name}")


@dataclass(frozen=True)
class Quantified:
    quantifier: str
    name: str
    # None means the formula width
    width: Optional[int] = None


@dataclass(frozen=True)
class SOSFormula:
    """∃S_1..S_m . Q_1 x_1 .. Q_n x_n . body"""

    second_order: Tuple[FunctionSignature, ...]
    first_order: Tuple[Quantified, ...]
    body: BodyExpr
    default_width: int

    def signature(self, name: str) -> Optional[FunctionSignature]:
        for sig in self.second_order:
            if sig.name == name:
                return sig
        return None


@dataclass(frozen=True)
class SynthesisInstance:
    functions: Tuple[FunctionSignature, ...]
    universals: Tuple[Quantified, ...]
    body: BodyExpr
    width: int
    # name of the source, for logs and reports
    label: str = ""
    enable_shl: bool = False

    @property
    def input_bits(self) -> int:
        return input_bit_count(self)

    def signature(self, name: str) -> FunctionSignature:
        for sig in self.functions:
            if sig.name == name:
                return sig
        raise KeyError(name)

    def var_width(self, var: Quantified, width: Optional[int] = None) -> int:
        return active_var_width(var, self.width if width is None else width)


Assignment = Dict[str, int]


def active_var_width(var: Quantified, width: int) -> int:
    """Width of a variable on a machine of the given width."""
    if var.width is None:
        return width
    return min(var.width, width)


def input_bit_count(instance: SynthesisInstance, width: Optional[int] = None) -> int:
    w = instance.width if width is None else width
    return sum(active_var_width(v, w) for v in instance.universals)


def walk(expr: BodyExpr) -> Iterator[BodyExpr]:
    yield expr
    if isinstance(expr, (Op, BoolOp, App)):
        for arg in expr.args:
            yield from walk(arg)


def body_size(expr: BodyExpr) -> int:
    return sum(1 for _ in walk(expr))


def free_vars(expr: BodyExpr) -> List[str]:
    seen: List[str] = []
    for node in walk(expr):
        if isinstance(node, Var) and node.name not in seen:
            seen.append(node.name)
    return seen


def symbols_used(expr: BodyExpr) -> List[str]:
    seen: List[str] = []
    for node in walk(expr):
        if isinstance(node, App) and node.symbol not in seen:
            seen.append(node.symbol)
    return seen


def substitute(expr: BodyExpr, mapping: Dict[str, BodyExpr]) -> BodyExpr:
    """Replace variables by expressions."""
    if isinstance(expr, Var):
        return mapping.get(expr.name, expr)
    if isinstance(expr, Op):
        return Op(expr.opcode, tuple(substitute(a, mapping) for a in expr.args))
    if isinstance(expr, BoolOp):
        return BoolOp(expr.op, tuple(substitute(a, mapping) for a in expr.args))
    if isinstance(expr, App):
        return App(expr.symbol, tuple(substitute(a, mapping) for a in expr.args), expr.projection)
    return expr


def conjoin(parts: Sequence[BodyExpr]) -> BodyExpr:
    parts = list(parts)
    if not parts:
        return BoolConst(True)
    if len(parts) == 1:
        return parts[0]
    return BoolOp("band", tuple(parts))


def program_to_exprs(program: Program, args: Sequence[BodyExpr]) -> List[BodyExpr]:
    """Inline a program over argument expressions; one expression per output."""
    if len(args) != program.arity:
        raise ValueError(f"Program takes {program.arity} inputs, got {len(args)}")
    if not program.body:
        return [Lit(c) for c in program.constants[:program.out_count]]
    temps: List[BodyExpr] = []
    for instr in program.body:
        operands = []
        for operand in instr.operands:
            if operand.kind is OperandKind.CONST:
                operands.append(Lit(program.constants[operand.index]))
            elif operand.kind is OperandKind.INPUT:
                operands.append(args[operand.index])
            else:
                operands.append(temps[operand.index])
        temps.append(Op(instr.opcode, tuple(operands)))
    return temps[-program.out_count:]
