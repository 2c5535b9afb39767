import itertools
import random

import pytest

from lang.machine import eval_instruction, exec_program, mask, to_signed
from lang.opcodes import CORE_OPCODES, INTEGER_OPCODES, Opcode, search_opcodes
from lang.program import (
    Instruction,
    Operand,
    Program,
    canonicalize,
    constant_program,
    is_canonical,
    is_nop,
    lookup_program,
    validate,
    with_width,
)
from lang.text import parse_program, pretty_print
from utils.errors import MalformedProgram, ProgramSyntaxError, UnsupportedWidth

x0, x1 = Operand.input(0), Operand.input(1)
c0, c1 = Operand.const(0), Operand.const(1)
t1, t2 = Operand.temp(0), Operand.temp(1)


def clear_lowest_bit(width=32):
    return Program(1, 1, width, (1,), (
        Instruction(Opcode.SUB, (x0, c0)),
        Instruction(Opcode.AND, (x0, t1)),
    ))


def random_program(rng, arity, length, width, opcodes=INTEGER_OPCODES):
    constants = tuple(rng.randrange(1 << width) for _ in range(rng.randint(0, 2)))
    body = []
    for i in range(length):
        op = rng.choice(opcodes)
        sources = [Operand.const(k) for k in range(len(constants))]
        sources += [Operand.input(k) for k in range(arity)]
        sources += [Operand.temp(k) for k in range(i)]
        body.append(Instruction(op, tuple(rng.choice(sources) for _ in range(op.arity))))
    return Program(arity, 1, width, constants, tuple(body))


def every_body(arity, length, const_count, opcodes=INTEGER_OPCODES):
    """Every instruction list of the given shape, operands drawn from all sources."""
    if length == 0:
        yield ()
        return
    for prefix in every_body(arity, length - 1, const_count, opcodes):
        position = length - 1
        sources = [Operand.const(k) for k in range(const_count)]
        sources += [Operand.input(k) for k in range(arity)]
        sources += [Operand.temp(k) for k in range(position)]
        for op in opcodes:
            for operands in itertools.product(sources, repeat=op.arity):
                yield prefix + (Instruction(op, operands),)


def sample_constants(width):
    """All words at w <= 2; above that the words the nop and canonical rules single out."""
    if width <= 2:
        return list(range(1 << width))
    return sorted({0, 1, 2, mask(width), 1 << (width - 1)})


class TestMachine:

    @staticmethod
    def test_arithmetic_wraps():
        assert eval_instruction(Opcode.ADD, [15, 1], 4) == 0
        assert eval_instruction(Opcode.SUB, [0, 1], 4) == 15
        assert eval_instruction(Opcode.MUL, [6, 6], 4) == 4
        assert eval_instruction(Opcode.NEG, [1], 4) == 15
        assert eval_instruction(Opcode.NOT, [0b1010], 4) == 0b0101

    @staticmethod
    def test_shift_amount_is_reduced_modulo_width():
        assert eval_instruction(Opcode.LSHR, [0b1000, 7], 4) == 0b0001
        assert eval_instruction(Opcode.LSHR, [0b1000, 4], 4) == 0b1000
        assert eval_instruction(Opcode.SHL, [0b0001, 5], 4) == 0b0010

    @staticmethod
    def test_arithmetic_shift_keeps_sign():
        assert eval_instruction(Opcode.ASHR, [0b1000, 1], 4) == 0b1100
        assert eval_instruction(Opcode.ASHR, [0b0100, 1], 4) == 0b0010
        assert eval_instruction(Opcode.ASHR, [0x80000000, 31], 32) == 0xFFFFFFFF

    @staticmethod
    def test_signed_division():
        assert eval_instruction(Opcode.DIV, [from_int(-7), 2], 4) == from_int(-3)
        assert eval_instruction(Opcode.MOD, [from_int(-7), 2], 4) == from_int(-1)
        assert eval_instruction(Opcode.DIV, [7, from_int(-2)], 4) == from_int(-3)
        assert eval_instruction(Opcode.MOD, [7, from_int(-2)], 4) == 1

    @staticmethod
    def test_division_by_zero_is_total():
        assert eval_instruction(Opcode.DIV, [5, 0], 4) == 15
        assert eval_instruction(Opcode.MOD, [5, 0], 4) == 5

    @staticmethod
    def test_signed_min_max():
        assert eval_instruction(Opcode.MIN, [0b1111, 1], 4) == 0b1111
        assert eval_instruction(Opcode.MAX, [0b1111, 1], 4) == 1

    @staticmethod
    def test_comparisons_return_zero_or_one():
        assert eval_instruction(Opcode.LT, [1, 15], 4) == 1
        assert eval_instruction(Opcode.SLT, [1, 15], 4) == 0
        assert eval_instruction(Opcode.SLE, [15, 15], 4) == 1
        assert eval_instruction(Opcode.EQ, [3, 3], 4) == 1
        assert eval_instruction(Opcode.NEQ, [3, 3], 4) == 0

    @staticmethod
    def test_implies_and_ite_treat_nonzero_as_true():
        assert eval_instruction(Opcode.IMPLIES, [6, 0], 4) == 0
        assert eval_instruction(Opcode.IMPLIES, [0, 0], 4) == 1
        assert eval_instruction(Opcode.IMPLIES, [2, 9], 4) == 1
        assert eval_instruction(Opcode.ITE, [8, 3, 5], 4) == 3
        assert eval_instruction(Opcode.ITE, [0, 3, 5], 4) == 5

    @staticmethod
    def test_float_is_binary32_only():
        one = 0x3F800000
        two = 0x40000000
        assert eval_instruction(Opcode.FADD, [one, one], 32) == two
        assert eval_instruction(Opcode.FMUL, [two, two], 32) == 0x40800000
        with pytest.raises(UnsupportedWidth):
            eval_instruction(Opcode.FADD, [1, 1], 16)

    @staticmethod
    def test_every_integer_opcode_stays_in_range():
        for op in INTEGER_OPCODES:
            for args in itertools.product(range(8), repeat=op.arity):
                assert 0 <= eval_instruction(op, list(args), 3) <= 7, op

    @staticmethod
    def test_exec_reads_inputs_and_constants():
        program = clear_lowest_bit(8)
        assert exec_program(program, [0b01100]) == (0b01000,)
        assert exec_program(program, [0]) == (0,)

    @staticmethod
    def test_absolute_value_program():
        program = parse_program("t1 = ashr x0 c0; t2 = xor x0 t1; t3 = sub t2 t1", constants=[7], width=8)
        assert exec_program(program, [0xFB]) == (5,)
        assert exec_program(program, [5]) == (5,)

    @staticmethod
    def test_degenerate_program_returns_its_table():
        assert exec_program(constant_program(8, 8), []) == (8,)

    @staticmethod
    def test_eight_bit_examples():
        assert eval_instruction(Opcode.ADD, [3, 5], 8) == 8
        assert eval_instruction(Opcode.ADD, [255, 1], 8) == 0
        assert eval_instruction(Opcode.DIV, [5, 0], 8) == 255
        assert eval_instruction(Opcode.MOD, [5, 0], 8) == 5
        assert eval_instruction(Opcode.SLT, [0x80, 0x01], 8) == 1


def from_int(value, width=4):
    return value & mask(width)


class TestValidate:

    @staticmethod
    def test_well_formed_program_has_no_violations():
        assert validate(clear_lowest_bit()) == []
        assert validate(constant_program(7, 8)) == []

    @staticmethod
    def test_forward_reference():
        bad = Program(1, 1, 8, (), (Instruction(Opcode.ADD, (x0, t1)),))
        assert [v.code for v in validate(bad)] == ["forward-reference"]

    @staticmethod
    def test_index_and_range_violations():
        bad = Program(1, 1, 4, (16,), (Instruction(Opcode.ADD, (x1, c1)),))
        codes = {v.code for v in validate(bad)}
        assert codes == {"constant-range", "input-range", "constant-index"}

    @staticmethod
    def test_operand_count_and_float_width():
        bad = Program(1, 1, 8, (), (
            Instruction(Opcode.NEG, (x0, x0)),
            Instruction(Opcode.FADD, (x0, t1)),
        ))
        codes = {v.code for v in validate(bad)}
        assert codes == {"operand-count", "float-width"}

    @staticmethod
    def test_degenerate_program_needs_arity_zero():
        bad = Program(1, 1, 8, (3,), ())
        assert [v.code for v in validate(bad)] == ["degenerate"]

    @staticmethod
    def test_exec_refuses_malformed_programs():
        bad = Program(1, 1, 8, (), (Instruction(Opcode.ADD, (x0, t2)),))
        with pytest.raises(MalformedProgram):
            exec_program(bad, [1])


class TestCanonical:

    @staticmethod
    def test_nops():
        consts = (0, 1, 15)
        assert is_nop(Instruction(Opcode.ADD, (c0, x0)), consts, 4)
        assert is_nop(Instruction(Opcode.SUB, (x0, c0)), consts, 4)
        assert not is_nop(Instruction(Opcode.SUB, (c0, x0)), consts, 4)
        assert is_nop(Instruction(Opcode.MUL, (x0, c1)), consts, 4)
        assert is_nop(Instruction(Opcode.AND, (x0, x0)), consts, 4)
        assert is_nop(Instruction(Opcode.AND, (x0, Operand.const(2))), consts, 4)
        assert is_nop(Instruction(Opcode.ITE, (c1, x0, x0)), consts, 4)
        assert not is_nop(Instruction(Opcode.XOR, (x0, x0)), consts, 4)

    @staticmethod
    def test_canonical_form_rules():
        assert is_canonical(clear_lowest_bit())
        unsorted = Program(2, 1, 8, (), (Instruction(Opcode.ADD, (x1, x0)),))
        assert not is_canonical(unsorted)
        all_const = Program(1, 1, 8, (3, 4), (Instruction(Opcode.ADD, (c0, c1)),))
        assert not is_canonical(all_const)
        repeated = Program(1, 1, 8, (3, 3), (Instruction(Opcode.ADD, (c0, x0)),))
        assert not is_canonical(repeated)

    @staticmethod
    def test_canonicalize_preserves_semantics():
        rng = random.Random(7)
        for _ in range(300):
            program = random_program(rng, rng.randint(1, 2), rng.randint(1, 5), 3)
            canonical = canonicalize(program)
            assert is_canonical(canonical), pretty_print(canonical)
            assert canonical.length <= program.length
            for point in itertools.product(range(8), repeat=program.arity):
                assert exec_program(canonical, point) == exec_program(program, point)

    @staticmethod
    def test_canonicalize_drops_dead_code_and_nops():
        program = Program(1, 1, 8, (0, 5), (
            Instruction(Opcode.MUL, (x0, c1)),
            Instruction(Opcode.ADD, (x0, c0)),
            Instruction(Opcode.XOR, (t2, x0)),
        ))
        canonical = canonicalize(program)
        assert canonical.length == 1
        assert canonical.body[0].opcode is Opcode.XOR

    @staticmethod
    def test_aliased_outputs_reuse_the_shared_instruction():
        # both outputs are max(x0, x1); one copy suffices
        program = Program(2, 2, 4, (), (
            Instruction(Opcode.MAX, (x1, x0)),
            Instruction(Opcode.AND, (t1, t1)),
        ))
        canonical = canonicalize(program)
        assert canonical.length == 2
        assert is_canonical(canonical)
        assert [i.opcode for i in canonical.body] == [Opcode.MAX, Opcode.MIN]
        for point in itertools.product(range(16), repeat=2):
            assert exec_program(canonical, point) == exec_program(program, point)

    @staticmethod
    def test_output_used_by_a_later_output_stays_in_place():
        # outputs (t2, t1) where t2 reads t1
        program = Program(1, 2, 4, (), (
            Instruction(Opcode.NEG, (x0,)),
            Instruction(Opcode.ADD, (t1, x0)),
            Instruction(Opcode.OR, (t1, t1)),
        ))
        canonical = canonicalize(program)
        assert canonical.length <= program.length
        assert is_canonical(canonical)
        for x in range(16):
            assert exec_program(canonical, (x,)) == exec_program(program, (x,))

    @pytest.mark.slow
    @pytest.mark.parametrize("arity,width", [(1, 1), (1, 2), (1, 4), (2, 2)])
    def test_every_short_program_has_a_canonical_equivalent(self, arity, width):
        domain = list(itertools.product(range(1 << width), repeat=arity))
        const_counts = (0, 1) if arity == 1 else (0,)
        for length in (1, 2):
            for const_count in const_counts:
                tables = [()] if const_count == 0 else [(v,) for v in sample_constants(width)]
                for body in every_body(arity, length, const_count):
                    for constants in tables:
                        for out_count in range(1, length + 1):
                            program = Program(arity, out_count, width, constants, body)
                            canonical = canonicalize(program)
                            assert is_canonical(canonical), pretty_print(program)
                            assert canonical.length <= program.length, pretty_print(program)
                            for point in domain:
                                assert exec_program(canonical, point) == exec_program(program, point)

    @pytest.mark.parametrize("width", range(1, 7))
    def test_nop_instructions_can_be_rewired_to_an_operand(self, width):
        sources = (x0, c0)
        inputs = range(1 << width)
        for value in range(1 << width):
            constants = (value,)
            for op in INTEGER_OPCODES:
                for operands in itertools.product(sources, repeat=op.arity):
                    instr = Instruction(op, operands)
                    if not is_nop(instr, constants, width):
                        continue

                    def value_of(operand, x):
                        return x if operand == x0 else value

                    results = [eval_instruction(op, [value_of(o, x) for o in operands], width) for x in inputs]
                    assert any(
                        results == [value_of(o, x) for x in inputs] for o in operands
                    ), f"{instr} with c0={value} at width {width}"


class TestLookup:

    @staticmethod
    def test_lookup_program_realises_any_table():
        rng = random.Random(3)
        for arity in (1, 2):
            values = {p: rng.randrange(4) for p in itertools.product(range(4), repeat=arity)}
            program = lookup_program(arity, 2, lambda p: values[p])
            assert program.is_valid
            assert {instr.opcode for instr in program.body} <= {Opcode.EQ, Opcode.ITE}
            for point, value in values.items():
                assert exec_program(program, point) == (value,)

    @staticmethod
    def test_with_width_masks_constants():
        narrow = with_width(clear_lowest_bit(32), 4)
        assert narrow.width == 4
        assert narrow.constants == (1,)
        assert with_width(constant_program(0xFF, 8), 4).constants == (15,)


class TestText:

    @staticmethod
    def test_pretty_print_format():
        assert pretty_print(clear_lowest_bit()) == "prog 1 1 32 consts 1\nt1 = sub x0 c0\nt2 = and x0 t1\n"
        empty_table = Program(2, 1, 32, (), (Instruction(Opcode.XOR, (x0, x1)),))
        assert pretty_print(empty_table).splitlines()[0] == "prog 2 1 32 consts"

    @staticmethod
    def test_parse_inverts_pretty_print():
        rng = random.Random(11)
        for _ in range(50):
            program = random_program(rng, 2, rng.randint(1, 4), 16)
            assert parse_program(pretty_print(program)) == program

    @staticmethod
    def test_headerless_text_with_overrides():
        program = parse_program("t1 = sub x0 c0; t2 = and x0 t1  # clear lowest bit", constants=[1], width=8)
        assert program == clear_lowest_bit(8)

    @staticmethod
    def test_hex_words():
        program = parse_program("prog 1 1 32 consts 0xff\nt1 = and x0 c0\n")
        assert program.constants == (255,)

    @staticmethod
    def test_errors_carry_position():
        with pytest.raises(ProgramSyntaxError) as info:
            parse_program("prog 1 1 8 consts\nt1 = frob x0 x0\n")
        assert info.value.line == 2
        with pytest.raises(ProgramSyntaxError) as info:
            parse_program("t1 = and x0")
        assert info.value.line == 1

    @staticmethod
    def test_forward_reference_parses_but_does_not_validate():
        program = parse_program("prog 1 1 8 consts\nt1 = add x0 t1\n")
        assert not program.is_valid


class TestOpcodes:

    @staticmethod
    def test_search_set_excludes_extensions_by_default():
        assert Opcode.SHL not in search_opcodes(32)
        assert Opcode.SHL in search_opcodes(32, enable_shl=True)
        assert Opcode.FADD not in search_opcodes(32)
        assert Opcode.FADD in search_opcodes(32, enable_float=True)
        assert Opcode.FADD not in search_opcodes(16, enable_float=True)
        assert len(CORE_OPCODES) == 26

    @staticmethod
    def test_signed_view():
        assert to_signed(0b1000, 4) == -8
        assert to_signed(0b0111, 4) == 7
