"""Brute-force reference procedures used to cross-check the solver on tiny widths.

Nothing here shares code with the solver beyond the single-instruction
semantics of the machine.
"""

import itertools
from typing import Callable, Dict, Iterator, List, Mapping, Sequence, Tuple

from formula.ast import EXISTS, App, BodyExpr, BoolConst, BoolOp, Lit, Op, SOSFormula, Var
from lang.machine import eval_instruction

Table = Dict[Tuple[int, ...], Tuple[int, ...]]


def _mask(width: int) -> int:
    return (1 << width) - 1


def eval_with_tables(expr: BodyExpr, env: Mapping[str, int], tables: Mapping[str, Table], width: int) -> int:
    if isinstance(expr, Lit):
        return expr.value & _mask(width)
    if isinstance(expr, BoolConst):
        return int(expr.value)
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, Op):
        return eval_instruction(expr.opcode, [eval_with_tables(a, env, tables, width) for a in expr.args], width)
    if isinstance(expr, BoolOp):
        values = [eval_with_tables(a, env, tables, width) != 0 for a in expr.args]
        if expr.op == "band":
            return int(all(values))
        if expr.op == "bor":
            return int(any(values))
        if expr.op == "bnot":
            return int(not values[0])
        if expr.op == "bimplies":
            return int(not values[0] or values[1])
        return int(values[0] == values[1])
    if isinstance(expr, App):
        args = tuple(eval_with_tables(a, env, tables, width) for a in expr.args)
        return tables[expr.symbol][args][expr.projection]
    raise TypeError(expr)


def all_tables(arity: int, out_count: int, width: int) -> Iterator[Table]:
    """Every total function from arity-tuples of words to out_count-tuples of words."""
    domain = list(itertools.product(range(1 << width), repeat=arity))
    outputs = list(itertools.product(range(1 << width), repeat=out_count))
    for image in itertools.product(outputs, repeat=len(domain)):
        yield dict(zip(domain, image))


def game_value(formula: SOSFormula, tables: Mapping[str, Table], width: int) -> bool:
    prefix = formula.first_order

    def play(depth: int, env: Dict[str, int]) -> bool:
        if depth == len(prefix):
            return eval_with_tables(formula.body, env, tables, width) != 0
        var = prefix[depth]
        bits = width if var.width is None else min(var.width, width)
        results = (play(depth + 1, {**env, var.name: v}) for v in range(1 << bits))
        return any(results) if var.quantifier == EXISTS else all(results)

    return play(0, {})


def second_order_truth(formula: SOSFormula, width: int) -> bool:
    """Truth of the whole formula by trying every interpretation of every symbol."""
    symbols = formula.second_order
    choices = [list(all_tables(s.arity, s.out_count, width)) for s in symbols]
    for combo in itertools.product(*choices):
        tables = {s.name: t for s, t in zip(symbols, combo)}
        if game_value(formula, tables, width):
            return True
    return False


def qbf_truth(prefix: Sequence[Tuple[str, str]], matrix: BodyExpr) -> bool:
    def play(depth: int, env: Dict[str, int]) -> bool:
        if depth == len(prefix):
            return eval_with_tables(matrix, env, {}, 1) != 0
        quantifier, name = prefix[depth]
        results = (play(depth + 1, {**env, name: v}) for v in (0, 1))
        return any(results) if quantifier == EXISTS else all(results)

    return play(0, {})


def function_table(fn: Callable[..., int], arity: int, width: int) -> List[int]:
    return [fn(*point) & _mask(width) for point in itertools.product(range(1 << width), repeat=arity)]


def one_instruction_tables(arity: int, width: int, opcodes) -> Iterator[List[int]]:
    """Output tables of every one-instruction program with at most one constant.

    Constants are immediate here, so this covers a superset of what the
    enumerator would consider at length 1.
    """
    domain = list(itertools.product(range(1 << width), repeat=arity))
    for op in opcodes:
        for value in range(1 << width):
            sources = [("in", i) for i in range(arity)] + [("c", value)]
            for operands in itertools.product(sources, repeat=op.arity):
                table = []
                for point in domain:
                    args = [point[ref] if kind == "in" else ref for kind, ref in operands]
                    table.append(eval_instruction(op, args, width))
                yield table
