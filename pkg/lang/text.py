"""Text form of programs.

    prog N M w consts c0 c1 ...
    t1 = sub x0 c0
    t2 = and x0 t1

Instructions are separated by newlines or ';'. '#' starts a comment. Words are
decimal or 0x-hex. The header may be omitted when the caller supplies the
shape through keyword arguments.
"""

import re
from typing import List, Optional, Sequence, Tuple

from config import MAX_WORD_WIDTH, TARGET_WIDTH
from lang.opcodes import BY_NAME, OperandKind
from lang.program import Instruction, Operand, Program
from utils.errors import ProgramSyntaxError

_TOKEN = re.compile(r"\S+")
_OPERAND = re.compile(r"([xtc])(\d+)$")


def parse_word(token: str, line: Optional[int] = None, column: Optional[int] = None) -> int:
    try:
        if token.lower().startswith("0x"):
            return int(token, 16)
        return int(token, 10)
    except ValueError:
        raise ProgramSyntaxError(f"Invalid word '{token}'", line, column) from None


def _statements(text: str) -> List[Tuple[int, List[Tuple[int, str]]]]:
    """(line number, [(column, token), ...]) per statement, both 1-based."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code = raw.split("#", 1)[0]
        start = 0
        for part in code.split(";"):
            tokens = [(start + m.start() + 1, m.group()) for m in _TOKEN.finditer(part)]
            if tokens:
                out.append((lineno, tokens))
            start += len(part) + 1
    return out


def _parse_header(lineno: int, tokens: List[Tuple[int, str]]) -> Tuple[int, int, int, Tuple[int, ...]]:
    if len(tokens) < 5 or tokens[4][1] != "consts":
        col = tokens[min(len(tokens) - 1, 4)][0]
        raise ProgramSyntaxError("Header must read 'prog N M w consts ...'", lineno, col)
    arity, out_count, width = (parse_word(tok, lineno, col) for col, tok in tokens[1:4])
    if not 1 <= width <= MAX_WORD_WIDTH:
        raise ProgramSyntaxError(f"Width {width} outside 1..{MAX_WORD_WIDTH}", lineno, tokens[3][0])
    constants = tuple(parse_word(tok, lineno, col) for col, tok in tokens[5:])
    return arity, out_count, width, constants


def _parse_instruction(lineno: int, tokens: List[Tuple[int, str]], position: int) -> Instruction:
    if len(tokens) < 3 or tokens[1][1] != "=":
        raise ProgramSyntaxError("Expected 'tK = opcode operands'", lineno, tokens[0][0])
    col, target = tokens[0]
    match = _OPERAND.match(target)
    if not match or match.group(1) != "t":
        raise ProgramSyntaxError(f"Expected a temp name, got '{target}'", lineno, col)
    if int(match.group(2)) != position + 1:
        raise ProgramSyntaxError(f"Instruction defines {target}, expected t{position + 1}", lineno, col)

    col, name = tokens[2]
    opcode = BY_NAME.get(name)
    if opcode is None:
        raise ProgramSyntaxError(f"Unknown opcode '{name}'", lineno, col)
    args = tokens[3:]
    if len(args) != opcode.arity:
        where = args[-1][0] if args else col
        raise ProgramSyntaxError(f"{name} takes {opcode.arity} operands, got {len(args)}", lineno, where)

    operands = []
    for col, tok in args:
        match = _OPERAND.match(tok)
        if not match:
            raise ProgramSyntaxError(f"Invalid operand '{tok}'", lineno, col)
        kind, index = match.group(1), int(match.group(2))
        if kind == "x":
            operands.append(Operand.input(index))
        elif kind == "c":
            operands.append(Operand.const(index))
        else:
            if index < 1:
                raise ProgramSyntaxError("Temps are numbered from t1", lineno, col)
            operands.append(Operand.temp(index - 1))
    return Instruction(opcode, tuple(operands))


def parse_program(
    text: str,
    *,
    arity: Optional[int] = None,
    out_count: Optional[int] = None,
    width: Optional[int] = None,
    constants: Optional[Sequence[int]] = None,
) -> Program:
    """Parse program text. Keyword arguments override or stand in for the header.

    Without a header, arity defaults to one past the highest input index used,
    out_count to 1 and width to the target width.
    """
    statements = _statements(text)
    header = None
    if statements and statements[0][1][0][1] == "prog":
        header = _parse_header(*statements[0])
        statements = statements[1:]

    body = [_parse_instruction(lineno, tokens, i) for i, (lineno, tokens) in enumerate(statements)]

    if header is not None:
        h_arity, h_out, h_width, h_consts = header
    else:
        used = [o.index for instr in body for o in instr.operands if o.kind is OperandKind.INPUT]
        h_arity = max(used) + 1 if used else 0
        h_out, h_width, h_consts = 1, TARGET_WIDTH, ()

    return Program(
        arity=h_arity if arity is None else arity,
        out_count=h_out if out_count is None else out_count,
        width=h_width if width is None else width,
        constants=h_consts if constants is None else tuple(constants),
        body=tuple(body),
    )


def format_word(value: int, width: int) -> str:
    if width > 8 and value > 9:
        return hex(value)
    return str(value)


def pretty_print(program: Program) -> str:
    consts = " ".join(format_word(c, program.width) for c in program.constants)
    header = f"prog {program.arity} {program.out_count} {program.width} consts {consts}".rstrip()
    lines = [header]
    for i, instr in enumerate(program.body):
        lines.append(f"t{i + 1} = {instr}")
    return "\n".join(lines) + "\n"
