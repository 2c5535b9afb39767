"""Propositional circuits for L-machine words.

Words are lists of literals, least significant bit first. Gates fold constant
inputs, so a circuit over constant words yields constant literals.
"""

from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from pysat.formula import CNF, IDPool

from formula.ast import App, BodyExpr, BoolConst, BoolOp, Lit, Op, Var
from lang.machine import mask
from lang.opcodes import Opcode, OperandKind
from lang.program import Program
from utils.errors import CapacityError

Word = List[int]


class CircuitBuilder:
    def __init__(self, pool: Optional[IDPool] = None, cnf: Optional[CNF] = None):
        self.pool = pool or IDPool()
        self.cnf = cnf if cnf is not None else CNF()
        self._fresh = 0
        self.TRUE = self.new_var()
        self.FALSE = -self.TRUE
        self.cnf.append([self.TRUE])

    def new_var(self) -> int:
        self._fresh += 1
        return self.pool.id(("gate", self._fresh))

    def new_word(self, width: int, tag: Optional[tuple] = None) -> Word:
        if tag is None:
            return [self.new_var() for _ in range(width)]
        return [self.pool.id(tag + (i,)) for i in range(width)]

    def clause(self, lits: Sequence[int]) -> None:
        lits = [lit for lit in lits if lit != self.FALSE]
        if self.TRUE in lits:
            return
        self.cnf.append(lits)

    def assert_true(self, lit: int) -> None:
        self.clause([lit])

    def const(self, value: bool) -> int:
        return self.TRUE if value else self.FALSE

    def is_const(self, lit: int) -> bool:
        return lit in (self.TRUE, self.FALSE)

    # gates

    def and2(self, a: int, b: int) -> int:
        if a == self.FALSE or b == self.FALSE or a == -b:
            return self.FALSE
        if a == self.TRUE:
            return b
        if b == self.TRUE or a == b:
            return a
        g = self.new_var()
        self.cnf.extend([[-g, a], [-g, b], [g, -a, -b]])
        return g

    def or2(self, a: int, b: int) -> int:
        return -self.and2(-a, -b)

    def xor2(self, a: int, b: int) -> int:
        if a == self.FALSE:
            return b
        if b == self.FALSE:
            return a
        if a == self.TRUE:
            return -b
        if b == self.TRUE:
            return -a
        if a == b:
            return self.FALSE
        if a == -b:
            return self.TRUE
        g = self.new_var()
        self.cnf.extend([[-g, a, b], [-g, -a, -b], [g, -a, b], [g, a, -b]])
        return g

    def mux(self, s: int, a: int, b: int) -> int:
        """s ? a : b"""
        if s == self.TRUE or a == b:
            return a
        if s == self.FALSE:
            return b
        if a == self.TRUE and b == self.FALSE:
            return s
        if a == self.FALSE and b == self.TRUE:
            return -s
        g = self.new_var()
        self.cnf.extend([[-s, -a, g], [-s, a, -g], [s, -b, g], [s, b, -g]])
        return g

    def and_many(self, lits: Sequence[int]) -> int:
        out = self.TRUE
        for lit in lits:
            out = self.and2(out, lit)
        return out

    def or_many(self, lits: Sequence[int]) -> int:
        out = self.FALSE
        for lit in lits:
            out = self.or2(out, lit)
        return out

    # words

    def const_word(self, value: int, width: int) -> Word:
        return [self.const(bool(value >> i & 1)) for i in range(width)]

    def bool_word(self, bit: int, width: int) -> Word:
        return [bit] + [self.FALSE] * (width - 1)

    def nonzero(self, a: Word) -> int:
        return self.or_many(a)

    def mux_word(self, s: int, a: Word, b: Word) -> Word:
        return [self.mux(s, x, y) for x, y in zip(a, b)]

    def not_word(self, a: Word) -> Word:
        return [-x for x in a]

    def adder(self, a: Word, b: Word, carry: int) -> Tuple[Word, int]:
        out = []
        for x, y in zip(a, b):
            t = self.xor2(x, y)
            out.append(self.xor2(t, carry))
            carry = self.or2(self.and2(x, y), self.and2(t, carry))
        return out, carry

    def add(self, a: Word, b: Word) -> Word:
        return self.adder(a, b, self.FALSE)[0]

    def sub(self, a: Word, b: Word) -> Word:
        return self.adder(a, self.not_word(b), self.TRUE)[0]

    def neg(self, a: Word) -> Word:
        return self.sub(self.const_word(0, len(a)), a)

    def mul(self, a: Word, b: Word) -> Word:
        w = len(a)
        acc = self.const_word(0, w)
        for i in range(w):
            partial = [self.FALSE] * i + [self.and2(x, b[i]) for x in a[:w - i]]
            acc = self.add(acc, partial)
        return acc

    def ult(self, a: Word, b: Word) -> int:
        # a < b iff a - b borrows
        return -self.adder(a, self.not_word(b), self.TRUE)[1]

    def ule(self, a: Word, b: Word) -> int:
        return -self.ult(b, a)

    def slt(self, a: Word, b: Word) -> int:
        flip_a = a[:-1] + [-a[-1]]
        flip_b = b[:-1] + [-b[-1]]
        return self.ult(flip_a, flip_b)

    def sle(self, a: Word, b: Word) -> int:
        return -self.slt(b, a)

    def eq(self, a: Word, b: Word) -> int:
        return self.and_many([-self.xor2(x, y) for x, y in zip(a, b)])

    def udivrem(self, a: Word, b: Word) -> Tuple[Word, Word]:
        """Restoring division; a / 0 is all-ones with remainder a."""
        w = len(a)
        rem = self.const_word(0, w)
        quotient = [self.FALSE] * w
        for i in reversed(range(w)):
            # shift left by one, bring down bit i; keep w+1 bits
            shifted = [a[i]] + rem
            wide_b = b + [self.FALSE]
            fits = -self.ult(shifted, wide_b)
            diff = self.sub(shifted, wide_b)
            rem = self.mux_word(fits, diff, shifted)[:w]
            quotient[i] = fits
        return quotient, rem

    def sdivmod(self, a: Word, b: Word) -> Tuple[Word, Word]:
        sa, sb = a[-1], b[-1]
        abs_a = self.mux_word(sa, self.neg(a), a)
        abs_b = self.mux_word(sb, self.neg(b), b)
        q, r = self.udivrem(abs_a, abs_b)
        q = self.mux_word(self.xor2(sa, sb), self.neg(q), q)
        r = self.mux_word(sa, self.neg(r), r)
        b_zero = -self.nonzero(b)
        q = self.mux_word(b_zero, self.const_word(-1, len(a)), q)
        r = self.mux_word(b_zero, a, r)
        return q, r

    def shift_amount(self, b: Word) -> Word:
        """b mod w, as the bits a barrel shifter needs."""
        w = len(b)
        stages = (w - 1).bit_length()
        if w & (w - 1) == 0:
            return b[:stages]
        _, r = self.udivrem(b, self.const_word(w, w))
        return r[:stages]

    def shift(self, a: Word, b: Word, kind: Opcode) -> Word:
        w = len(a)
        fill = a[-1] if kind is Opcode.ASHR else self.FALSE
        out = list(a)
        for stage, s in enumerate(self.shift_amount(b)):
            d = 1 << stage
            if kind is Opcode.SHL:
                moved = [out[i - d] if i - d >= 0 else self.FALSE for i in range(w)]
            else:
                moved = [out[i + d] if i + d < w else fill for i in range(w)]
            out = self.mux_word(s, moved, out)
        return out

    def apply(self, opcode: Opcode, args: Sequence[Word]) -> Word:
        """Circuit for one instruction, matching lang.machine.eval_instruction."""
        w = len(args[0])
        a = args[0]
        if opcode.is_float:
            raise CapacityError(f"{opcode} has no propositional encoding")
        if opcode is Opcode.NEG:
            return self.neg(a)
        if opcode is Opcode.NOT:
            return self.not_word(a)
        b = args[1]
        if opcode is Opcode.ADD:
            return self.add(a, b)
        if opcode is Opcode.SUB:
            return self.sub(a, b)
        if opcode is Opcode.MUL:
            return self.mul(a, b)
        if opcode is Opcode.DIV:
            return self.sdivmod(a, b)[0]
        if opcode is Opcode.MOD:
            return self.sdivmod(a, b)[1]
        if opcode is Opcode.MIN:
            return self.mux_word(self.sle(a, b), a, b)
        if opcode is Opcode.MAX:
            return self.mux_word(self.sle(b, a), a, b)
        if opcode is Opcode.AND:
            return [self.and2(x, y) for x, y in zip(a, b)]
        if opcode is Opcode.OR:
            return [self.or2(x, y) for x, y in zip(a, b)]
        if opcode is Opcode.XOR:
            return [self.xor2(x, y) for x, y in zip(a, b)]
        if opcode in (Opcode.LSHR, Opcode.ASHR, Opcode.SHL):
            return self.shift(a, b, opcode)
        if opcode is Opcode.LE:
            return self.bool_word(self.ule(a, b), w)
        if opcode is Opcode.LT:
            return self.bool_word(self.ult(a, b), w)
        if opcode is Opcode.SLE:
            return self.bool_word(self.sle(a, b), w)
        if opcode is Opcode.SLT:
            return self.bool_word(self.slt(a, b), w)
        if opcode is Opcode.EQ:
            return self.bool_word(self.eq(a, b), w)
        if opcode is Opcode.NEQ:
            return self.bool_word(-self.eq(a, b), w)
        if opcode is Opcode.IMPLIES:
            return self.bool_word(self.or2(-self.nonzero(a), self.nonzero(b)), w)
        if opcode is Opcode.ITE:
            return self.mux_word(self.nonzero(a), b, args[2])
        raise ValueError(f"Unknown opcode: {opcode}")

    def select(self, selector: Word, options: Sequence[Word]) -> Word:
        """options[selector] by a binary mux tree; out-of-range picks the last option."""
        layer = list(options)
        for bit in selector:
            nxt = []
            for i in range(0, len(layer), 2):
                low = layer[i]
                high = layer[i + 1] if i + 1 < len(layer) else layer[i]
                nxt.append(self.mux_word(bit, high, low))
            layer = nxt
        return layer[0]


def word_value(model: set, word: Word) -> int:
    """Integer value of a word under a model given as a set of true literals."""
    value = 0
    for i, lit in enumerate(word):
        if lit in model:
            value |= 1 << i
    return value


def const_value(builder: CircuitBuilder, word: Word) -> Optional[int]:
    """Value of a fully folded word, or None if any bit is undetermined."""
    value = 0
    for i, lit in enumerate(word):
        if lit == builder.TRUE:
            value |= 1 << i
        elif lit != builder.FALSE:
            return None
    return value


def blast_program(builder: CircuitBuilder, program: Program, args: Sequence[Word]) -> List[Word]:
    """Output words of a concrete program on argument words."""
    w = program.width
    consts = [builder.const_word(c, w) for c in program.constants]
    if not program.body:
        return consts[:program.out_count]
    temps: List[Word] = []
    for instr in program.body:
        operands = []
        for operand in instr.operands:
            if operand.kind is OperandKind.CONST:
                operands.append(consts[operand.index])
            elif operand.kind is OperandKind.INPUT:
                operands.append(args[operand.index])
            else:
                operands.append(temps[operand.index])
        temps.append(builder.apply(instr.opcode, operands))
    return temps[-program.out_count:]


Instantiate = Callable[[str, Sequence[Word]], List[Word]]


def blast_expr(builder: CircuitBuilder, node: BodyExpr, env: Mapping[str, Word], width: int,
               instantiate: Instantiate, cache: Dict) -> Word:
    """Word for a body expression; applications go through `instantiate`, once per argument tuple."""
    b = builder
    if isinstance(node, Lit):
        return b.const_word(node.value & mask(width), width)
    if isinstance(node, BoolConst):
        return b.bool_word(b.const(node.value), width)
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Op):
        return b.apply(node.opcode, [blast_expr(b, a, env, width, instantiate, cache) for a in node.args])
    if isinstance(node, BoolOp):
        bits = [b.nonzero(blast_expr(b, a, env, width, instantiate, cache)) for a in node.args]
        if node.op == "band":
            bit = b.and_many(bits)
        elif node.op == "bor":
            bit = b.or_many(bits)
        elif node.op == "bnot":
            bit = -bits[0]
        elif node.op == "bimplies":
            bit = b.or2(-bits[0], bits[1])
        else:
            bit = -b.xor2(bits[0], bits[1])
        return b.bool_word(bit, width)
    if isinstance(node, App):
        args = [blast_expr(b, a, env, width, instantiate, cache) for a in node.args]
        key = (node.symbol, tuple(tuple(a) for a in args))
        if key not in cache:
            cache[key] = instantiate(node.symbol, args)
        return cache[key][node.projection]
    raise TypeError(f"Not a body expression: {node!r}")
