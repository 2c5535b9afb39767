"""Reader and printer for the formula file format.

    (width 8)
    (exists-fun S (arity 2) (out 1) (predicate))
    (forall x1 x2)
    (assert (implies (app S x1 x2) (app S x2 x1)))

Quantifier forms are read in order and make up the first-order prefix; a
variable may carry its own width as `(name bits)`. Several `assert` forms are
conjoined.
"""

from typing import Dict, Iterable, List, Mapping, Optional

from config import MAX_WORD_WIDTH, TARGET_WIDTH
from formula.ast import (
    BOOL_CONNECTIVES,
    EXISTS,
    FORALL,
    FUNCTION,
    PREDICATE,
    App,
    BodyExpr,
    BoolConst,
    BoolOp,
    FunctionSignature,
    Lit,
    Op,
    Quantified,
    SOSFormula,
    Var,
    conjoin,
)
from formula.sexpr import Atom, SExpr, SList, expect_atom, expect_int, expect_list, read_all
from lang.opcodes import BY_NAME
from utils.errors import ArityMismatch, FormulaSyntaxError, UnknownSymbol
from utils.logger import setup_logger

logger = setup_logger("formula")

_CONNECTIVE_ARITY = {"bnot": 1, "bimplies": 2, "biff": 2}


class ExprParser:
    """Builds body expressions over a fixed scope of variables and symbols."""

    def __init__(self, variables: Iterable[str], signatures: Mapping[str, FunctionSignature]):
        self.variables = set(variables)
        self.signatures = dict(signatures)

    def parse(self, node: SExpr) -> BodyExpr:
        if isinstance(node, Atom):
            return self._atom(node)
        if not node.items:
            raise FormulaSyntaxError("Empty expression", node.line, node.column)
        head = expect_atom(node.items[0], "an operator").text
        args = node.items[1:]

        if head == "app":
            return self._app(node, args, projection=0)
        if head == "proj":
            if len(args) != 2:
                raise FormulaSyntaxError("Expected (proj i (app ...))", node.line, node.column)
            index = expect_int(args[0], "a projection index")
            inner = expect_list(args[1], "an application")
            if inner.head() != "app":
                raise FormulaSyntaxError("proj applies to an (app ...) form", inner.line, inner.column)
            return self._app(inner, inner.items[1:], projection=index)
        if head in BOOL_CONNECTIVES:
            expected = _CONNECTIVE_ARITY.get(head)
            if (expected is not None and len(args) != expected) or not args:
                raise ArityMismatch(f"{head} takes {expected or 'at least 1'} arguments, got {len(args)}")
            return BoolOp(head, tuple(self.parse(a) for a in args))
        opcode = BY_NAME.get(head)
        if opcode is None:
            raise FormulaSyntaxError(f"Unknown operator '{head}'", node.line, node.column)
        if len(args) != opcode.arity:
            raise ArityMismatch(f"{head} takes {opcode.arity} arguments, got {len(args)} (line {node.line})")
        return Op(opcode, tuple(self.parse(a) for a in args))

    def _atom(self, atom: Atom) -> BodyExpr:
        if atom.text == "true":
            return BoolConst(True)
        if atom.text == "false":
            return BoolConst(False)
        try:
            return Lit(int(atom.text, 0))
        except ValueError:
            pass
        if atom.text not in self.variables:
            raise UnknownSymbol(f"Undeclared variable '{atom.text}' at line {atom.line}, column {atom.column}")
        return Var(atom.text)

    def _app(self, node: SList, args: List[SExpr], projection: int) -> App:
        if not args:
            raise FormulaSyntaxError("Application needs a symbol", node.line, node.column)
        name = expect_atom(args[0], "a function symbol").text
        sig = self.signatures.get(name)
        if sig is None:
            raise UnknownSymbol(f"Undeclared symbol '{name}' at line {node.line}, column {node.column}")
        if len(args) - 1 != sig.arity:
            raise ArityMismatch(f"{name} takes {sig.arity} arguments, got {len(args) - 1} (line {node.line})")
        if not 0 <= projection < sig.out_count:
            raise ArityMismatch(f"Projection {projection} out of range for {name} with {sig.out_count} outputs")
        return App(name, tuple(self.parse(a) for a in args[1:]), projection)


def parse_signature(form: SList) -> FunctionSignature:
    if len(form.items) < 2:
        raise FormulaSyntaxError("exists-fun needs a name", form.line, form.column)
    name = expect_atom(form.items[1], "a function name").text
    arity, out_count, role, width = 0, 1, FUNCTION, None
    for option in form.items[2:]:
        option = expect_list(option, "an (arity k), (out m), (predicate) or (width w) option")
        key = option.head()
        if key == "arity" and len(option.items) == 2:
            arity = expect_int(option.items[1], "an arity")
        elif key == "out" and len(option.items) == 2:
            out_count = expect_int(option.items[1], "an output count")
        elif key == "width" and len(option.items) == 2:
            width = expect_int(option.items[1], "a width")
        elif key in (PREDICATE, FUNCTION) and len(option.items) == 1:
            role = key
        else:
            raise FormulaSyntaxError(f"Unknown exists-fun option '{key}'", option.line, option.column)
    try:
        return FunctionSignature(name, arity, out_count, role, width)
    except ValueError as e:
        raise FormulaSyntaxError(str(e), form.line, form.column) from None


def parse_variables(form: SList, quantifier: str) -> List[Quantified]:
    out = []
    for item in form.items[1:]:
        if isinstance(item, Atom):
            out.append(Quantified(quantifier, item.text))
            continue
        if len(item.items) != 2:
            raise FormulaSyntaxError("Expected (name width)", item.line, item.column)
        name = expect_atom(item.items[0], "a variable name").text
        width = expect_int(item.items[1], "a variable width")
        if not 1 <= width <= MAX_WORD_WIDTH:
            raise FormulaSyntaxError(f"Width {width} outside 1..{MAX_WORD_WIDTH}", item.line, item.column)
        out.append(Quantified(quantifier, name, width))
    return out


def parse_width(form: SList) -> int:
    if len(form.items) != 2:
        raise FormulaSyntaxError("Expected (width W)", form.line, form.column)
    width = expect_int(form.items[1], "a width")
    if not 1 <= width <= MAX_WORD_WIDTH:
        raise FormulaSyntaxError(f"Width {width} outside 1..{MAX_WORD_WIDTH}", form.line, form.column)
    return width


def parse_formula(text: str, default_width: Optional[int] = None) -> SOSFormula:
    forms = read_all(text)
    width = default_width or TARGET_WIDTH
    signatures: Dict[str, FunctionSignature] = {}
    prefix: List[Quantified] = []
    asserts: List[SList] = []

    for form in forms:
        form = expect_list(form, "a top-level form")
        head = form.head()
        if head == "width":
            width = parse_width(form)
        elif head == "exists-fun":
            sig = parse_signature(form)
            if sig.name in signatures:
                raise FormulaSyntaxError(f"Symbol '{sig.name}' declared twice", form.line, form.column)
            signatures[sig.name] = sig
        elif head in (FORALL, EXISTS):
            prefix.extend(parse_variables(form, head))
        elif head == "assert":
            if len(form.items) != 2:
                raise FormulaSyntaxError("Expected (assert expr)", form.line, form.column)
            asserts.append(form)
        else:
            raise FormulaSyntaxError(f"Unknown form '{head}'", form.line, form.column)

    names = [v.name for v in prefix]
    duplicates = {n for n in names if names.count(n) > 1}
    if duplicates:
        raise FormulaSyntaxError(f"Variables quantified twice: {', '.join(sorted(duplicates))}")

    parser = ExprParser(names, signatures)
    body = conjoin([parser.parse(form.items[1]) for form in asserts])
    formula = SOSFormula(tuple(signatures.values()), tuple(prefix), body, width)
    logger.debug(f"Parsed formula with {len(signatures)} symbols and {len(prefix)} variables at width {width}")
    return formula


def format_expr(expr: BodyExpr) -> str:
    if isinstance(expr, Lit):
        return str(expr.value)
    if isinstance(expr, BoolConst):
        return "true" if expr.value else "false"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Op):
        return f"({expr.opcode.value} {' '.join(format_expr(a) for a in expr.args)})"
    if isinstance(expr, BoolOp):
        return f"({expr.op} {' '.join(format_expr(a) for a in expr.args)})"
    if isinstance(expr, App):
        inner = " ".join([f"(app {expr.symbol}"] + [format_expr(a) for a in expr.args]) + ")"
        if expr.projection:
            return f"(proj {expr.projection} {inner})"
        return inner
    raise TypeError(f"Not a body expression: {expr!r}")


def _format_var(var: Quantified) -> str:
    return var.name if var.width is None else f"({var.name} {var.width})"


def format_formula(formula: SOSFormula) -> str:
    lines = [f"(width {formula.default_width})"]
    for sig in formula.second_order:
        options = f"(arity {sig.arity}) (out {sig.out_count}) ({sig.role})"
        if sig.width is not None:
            options += f" (width {sig.width})"
        lines.append(f"(exists-fun {sig.name} {options})")
    group: List[Quantified] = []
    for var in list(formula.first_order) + [None]:
        if group and (var is None or var.quantifier != group[0].quantifier):
            lines.append(f"({group[0].quantifier} {' '.join(_format_var(v) for v in group)})")
            group = []
        if var is not None:
            group.append(var)
    lines.append(f"(assert {format_expr(formula.body)})")
    return "\n".join(lines) + "\n"
