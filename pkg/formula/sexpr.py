"""S-expression reader shared by formula, loop and corpus files."""

import re
from dataclasses import dataclass
from typing import List, Union

from utils.errors import FormulaSyntaxError

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


@dataclass
class Atom:
    text: str
    line: int
    column: int


@dataclass
class SList:
    items: List["SExpr"]
    line: int
    column: int

    def head(self) -> str:
        if self.items and isinstance(self.items[0], Atom):
            return self.items[0].text
        return ""


SExpr = Union[Atom, SList]


def read_all(text: str) -> List[SExpr]:
    """Parse every top-level s-expression; ';' starts a comment."""
    tokens = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        code = raw.split(";", 1)[0]
        for m in _TOKEN.finditer(code):
            tokens.append((m.group(), lineno, m.start() + 1))

    out: List[SExpr] = []
    stack: List[SList] = []
    for tok, line, col in tokens:
        if tok == "(":
            stack.append(SList([], line, col))
        elif tok == ")":
            if not stack:
                raise FormulaSyntaxError("Unbalanced ')'", line, col)
            done = stack.pop()
            (stack[-1].items if stack else out).append(done)
        else:
            (stack[-1].items if stack else out).append(Atom(tok, line, col))
    if stack:
        raise FormulaSyntaxError("Unclosed '('", stack[-1].line, stack[-1].column)
    return out


def expect_list(node: SExpr, what: str) -> SList:
    if not isinstance(node, SList):
        raise FormulaSyntaxError(f"Expected {what}", node.line, node.column)
    return node


def expect_atom(node: SExpr, what: str) -> Atom:
    if not isinstance(node, Atom):
        raise FormulaSyntaxError(f"Expected {what}", node.line, node.column)
    return node


def expect_int(node: SExpr, what: str) -> int:
    atom = expect_atom(node, what)
    try:
        return int(atom.text, 0)
    except ValueError:
        raise FormulaSyntaxError(f"Expected {what}, got '{atom.text}'", atom.line, atom.column) from None
