from typing import Dict, List

from formula.ast import (
    EXISTS,
    FUNCTION,
    App,
    BodyExpr,
    FunctionSignature,
    Lit,
    Op,
    Quantified,
    SOSFormula,
    SynthesisInstance,
    Var,
    substitute,
)
from lang.machine import mask
from lang.opcodes import Opcode
from utils.logger import setup_logger

logger = setup_logger("formula")


def skolem_name(variable: str, taken: set) -> str:
    name = f"sk_{variable}"
    suffix = 1
    while name in taken:
        suffix += 1
        name = f"sk_{variable}_{suffix}"
    return name


def skolemize(formula: SOSFormula, label: str = "", enable_shl: bool = False) -> SynthesisInstance:
    """Replace each first-order ∃y by a fresh function of the universals before it."""
    taken = {sig.name for sig in formula.second_order}
    functions: List[FunctionSignature] = list(formula.second_order)
    universals: List[Quantified] = []
    mapping: Dict[str, BodyExpr] = {}

    for var in formula.first_order:
        if var.quantifier != EXISTS:
            universals.append(var)
            continue
        name = skolem_name(var.name, taken)
        taken.add(name)
        sig = FunctionSignature(name, len(universals), 1, FUNCTION, var.width)
        functions.append(sig)
        term: BodyExpr = App(name, tuple(Var(u.name) for u in universals))
        if var.width is not None and var.width < formula.default_width:
            # the witness ranges over y's own domain
            term = Op(Opcode.AND, (term, Lit(mask(var.width))))
        mapping[var.name] = term
        logger.debug(f"Skolemized {var.name} as {name}/{sig.arity}")

    body = substitute(formula.body, mapping) if mapping else formula.body
    return SynthesisInstance(
        functions=tuple(functions),
        universals=tuple(universals),
        body=body,
        width=formula.default_width,
        label=label,
        enable_shl=enable_shl,
    )


def as_formula(instance: SynthesisInstance) -> SOSFormula:
    """The purely universal formula of an instance."""
    return SOSFormula(instance.functions, instance.universals, instance.body, instance.width)
