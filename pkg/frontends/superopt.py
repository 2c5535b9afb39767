"""Superoptimisation: find the shortest program equal to a reference everywhere."""

from typing import Optional, Sequence, Union

from config import TARGET_WIDTH
from formula.ast import (
    FORALL,
    FUNCTION,
    App,
    BodyExpr,
    FunctionSignature,
    Op,
    Quantified,
    SOSFormula,
    Var,
    conjoin,
    free_vars,
    program_to_exprs,
)
from lang.opcodes import Opcode
from lang.program import Program
from utils.errors import ArityMismatch, UnknownSymbol

Reference = Union[Program, BodyExpr, Sequence[BodyExpr]]


def input_names(arity: int):
    return [f"x{i}" for i in range(arity)]


def encode_superopt(reference: Reference, arity: Optional[int] = None, out_count: Optional[int] = None,
                    width: Optional[int] = None, name: str = "P") -> SOSFormula:
    """∃P. ∀x. P(x) = reference(x), output by output.

    An expression reference is written over x0..x{n-1}. A program reference
    fixes arity and output count; its instructions are inlined.
    """
    if isinstance(reference, Program):
        if arity is not None and arity != reference.arity:
            raise ArityMismatch(f"Reference program takes {reference.arity} inputs, not {arity}")
        if out_count is not None and out_count != reference.out_count:
            raise ArityMismatch(f"Reference program has {reference.out_count} outputs, not {out_count}")
        arity, out_count = reference.arity, reference.out_count
        width = width or reference.width
        targets = program_to_exprs(reference, [Var(n) for n in input_names(arity)])
    else:
        targets = list(reference) if isinstance(reference, (list, tuple)) else [reference]
        if arity is None:
            raise ArityMismatch("An expression reference needs an explicit arity")
        if out_count is not None and out_count != len(targets):
            raise ArityMismatch(f"{len(targets)} reference expressions for {out_count} outputs")
        out_count = len(targets)
        names = set(input_names(arity))
        for expr in targets:
            stray = [v for v in free_vars(expr) if v not in names]
            if stray:
                raise UnknownSymbol(f"Reference refers to {', '.join(stray)}, expected x0..x{arity - 1}")

    xs = tuple(Var(n) for n in input_names(arity))
    body = conjoin([Op(Opcode.EQ, (App(name, xs, k), target)) for k, target in enumerate(targets)])
    prefix = tuple(Quantified(FORALL, n) for n in input_names(arity))
    sig = FunctionSignature(name, arity, out_count, FUNCTION)
    return SOSFormula((sig,), prefix, body, width or TARGET_WIDTH)
