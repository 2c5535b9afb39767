"""Truth of formula bodies under concrete inputs and witness programs."""

import itertools
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence

from formula.ast import (
    EXISTS,
    App,
    Assignment,
    BodyExpr,
    BoolConst,
    BoolOp,
    FunctionSignature,
    Lit,
    Op,
    Quantified,
    SOSFormula,
    Var,
    active_var_width,
)
from lang.machine import eval_instruction, exec_program, mask
from lang.program import Program
from utils.errors import ArityMismatch, UnknownSymbol, WidthMismatch


def eval_expr(expr: BodyExpr, env: Mapping[str, int], witnesses: Mapping[str, Program], width: int) -> int:
    """Word value of an expression; booleans are 0/1, truth is nonzero."""
    if isinstance(expr, Lit):
        return expr.value & mask(width)
    if isinstance(expr, BoolConst):
        return int(expr.value)
    if isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise UnknownSymbol(f"Unbound variable '{expr.name}'") from None
    if isinstance(expr, Op):
        args = [eval_expr(a, env, witnesses, width) for a in expr.args]
        return eval_instruction(expr.opcode, args, width)
    if isinstance(expr, BoolOp):
        op = expr.op
        if op == "band":
            return int(all(eval_expr(a, env, witnesses, width) for a in expr.args))
        if op == "bor":
            return int(any(eval_expr(a, env, witnesses, width) for a in expr.args))
        if op == "bnot":
            return int(not eval_expr(expr.args[0], env, witnesses, width))
        left = eval_expr(expr.args[0], env, witnesses, width) != 0
        right = eval_expr(expr.args[1], env, witnesses, width) != 0
        if op == "bimplies":
            return int(not left or right)
        if op == "biff":
            return int(left == right)
        raise ValueError(f"Unknown connective: {op}")
    if isinstance(expr, App):
        program = witnesses.get(expr.symbol)
        if program is None:
            raise UnknownSymbol(f"No witness for '{expr.symbol}'")
        if program.width != width:
            raise WidthMismatch(f"Witness for {expr.symbol} has width {program.width}, evaluating at {width}")
        args = [eval_expr(a, env, witnesses, width) for a in expr.args]
        if len(args) != program.arity:
            raise ArityMismatch(f"{expr.symbol} applied to {len(args)} arguments, witness takes {program.arity}")
        return exec_program(program, args)[expr.projection]
    raise TypeError(f"Not a body expression: {expr!r}")


def evaluate_body(
    body: BodyExpr,
    assignment: Assignment,
    witnesses: Mapping[str, Program],
    width: int,
) -> bool:
    return eval_expr(body, assignment, witnesses, width) != 0


def check_witnesses(
    functions: Iterable[FunctionSignature],
    witnesses: Mapping[str, Program],
    width: int,
) -> None:
    """Raise unless every signature has a matching witness program."""
    for sig in functions:
        program = witnesses.get(sig.name)
        if program is None:
            raise UnknownSymbol(f"No witness for '{sig.name}'")
        if program.width != width:
            raise WidthMismatch(f"Witness for {sig.name} has width {program.width}, expected {width}")
        if program.arity != sig.arity or program.out_count != sig.out_count:
            raise ArityMismatch(
                f"Witness for {sig.name} is {program.arity}->{program.out_count}, "
                f"signature is {sig.arity}->{sig.out_count}"
            )


def assignments(variables: Sequence[Quantified], width: int) -> Iterator[Dict[str, int]]:
    """Every point of the domain, in counting order (first variable slowest)."""
    ranges = [range(1 << active_var_width(v, width)) for v in variables]
    for values in itertools.product(*ranges):
        yield dict(zip((v.name for v in variables), values))


def holds(formula: SOSFormula, witnesses: Mapping[str, Program], width: Optional[int] = None) -> bool:
    """Truth of the first-order part by full game-tree expansion."""
    w = formula.default_width if width is None else width
    check_witnesses(formula.second_order, witnesses, w)
    prefix = formula.first_order

    def play(depth: int, env: Dict[str, int]) -> bool:
        if depth == len(prefix):
            return evaluate_body(formula.body, env, witnesses, w)
        var = prefix[depth]
        results = (
            play(depth + 1, {**env, var.name: value})
            for value in range(1 << active_var_width(var, w))
        )
        return any(results) if var.quantifier == EXISTS else all(results)

    return play(0, {})
