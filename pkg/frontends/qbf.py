"""Quantified Boolean formulas as width-1 second-order formulas.

Existential variables become Skolem functions of the universals before them, so
a QBF is true iff its encoding is satisfiable. QDIMACS input is supported.
"""

import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from formula.ast import (
    EXISTS,
    FORALL,
    BodyExpr,
    BoolConst,
    BoolOp,
    Quantified,
    SOSFormula,
    SynthesisInstance,
    Var,
    free_vars,
)
from formula.skolem import skolemize
from utils.errors import FormulaSyntaxError, UnknownSymbol
from utils.logger import setup_logger

logger = setup_logger("frontends")


@dataclass(frozen=True)
class QbfFormula:
    prefix: Tuple[Tuple[str, str], ...]
    matrix: BodyExpr

    def __post_init__(self):
        names = [name for _, name in self.prefix]
        if len(set(names)) != len(names):
            raise ValueError("Variable quantified twice")
        for quantifier, name in self.prefix:
            if quantifier not in (FORALL, EXISTS):
                raise ValueError(f"Unknown quantifier '{quantifier}' for {name}")
        stray = [v for v in free_vars(self.matrix) if v not in names]
        if stray:
            raise UnknownSymbol(f"Matrix refers to unquantified {', '.join(stray)}")

    @property
    def variables(self) -> List[str]:
        return [name for _, name in self.prefix]


def encode_qbf(qbf: QbfFormula) -> SOSFormula:
    """The QBF as a first-order prefix over 1-bit words; skolemize lifts the ∃s."""
    prefix = tuple(Quantified(q, name) for q, name in qbf.prefix)
    return SOSFormula((), prefix, qbf.matrix, 1)


def qbf_instance(qbf: QbfFormula, label: str = "") -> SynthesisInstance:
    return skolemize(encode_qbf(qbf), label=label)


def negate_qbf(qbf: QbfFormula) -> QbfFormula:
    dual = tuple((EXISTS if q == FORALL else FORALL, name) for q, name in qbf.prefix)
    matrix = qbf.matrix
    if isinstance(matrix, BoolOp) and matrix.op == "bnot":
        return QbfFormula(dual, matrix.args[0])
    return QbfFormula(dual, BoolOp("bnot", (matrix,)))


def cnf_matrix(clauses: Sequence[Sequence[int]], name=lambda v: f"v{v}") -> BodyExpr:
    """Conjunction of clauses over signed DIMACS literals."""
    parts = []
    for clause in clauses:
        literals = [Var(name(abs(lit))) if lit > 0 else BoolOp("bnot", (Var(name(abs(lit))),)) for lit in clause]
        if not literals:
            return BoolConst(False)
        parts.append(literals[0] if len(literals) == 1 else BoolOp("bor", tuple(literals)))
    if not parts:
        return BoolConst(True)
    return parts[0] if len(parts) == 1 else BoolOp("band", tuple(parts))


def parse_qdimacs(text: str) -> QbfFormula:
    """Standard QDIMACS; variables that no quantifier line binds are outermost existentials."""
    declared: Optional[Tuple[int, int]] = None
    prefix: List[Tuple[str, int]] = []
    clauses: List[List[int]] = []
    current: List[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tokens = line.split()
        if tokens[0] == "p":
            if len(tokens) != 4 or tokens[1] != "cnf":
                raise FormulaSyntaxError("Expected 'p cnf <vars> <clauses>'", lineno, 1)
            try:
                declared = (int(tokens[2]), int(tokens[3]))
            except ValueError:
                raise FormulaSyntaxError("Problem line needs two integers", lineno, 1) from None
            continue
        if declared is None:
            raise FormulaSyntaxError("Missing problem line before the prefix", lineno, 1)
        try:
            if tokens[0] in ("a", "e"):
                if clauses or current:
                    raise FormulaSyntaxError("Quantifier line after the first clause", lineno, 1)
                values = [int(t) for t in tokens[1:]]
                if not values or values[-1] != 0:
                    raise FormulaSyntaxError("Quantifier line must end with 0", lineno, len(raw))
                quantifier = FORALL if tokens[0] == "a" else EXISTS
                prefix.extend((quantifier, v) for v in values[:-1])
                continue
            values = [int(t) for t in tokens]
        except ValueError:
            raise FormulaSyntaxError(f"Expected integers in '{line}'", lineno, 1) from None
        for lit in values:
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    if declared is None:
        raise FormulaSyntaxError("Missing 'p cnf' problem line")
    if current:
        clauses.append(current)

    n_vars, n_clauses = declared
    if len(clauses) != n_clauses:
        logger.warning(f"Problem line announces {n_clauses} clauses, found {len(clauses)}")
    bound = {v for _, v in prefix}
    for _, v in prefix:
        if not 1 <= v <= n_vars:
            raise FormulaSyntaxError(f"Variable {v} outside 1..{n_vars}")
    used = sorted({abs(lit) for clause in clauses for lit in clause})
    free = [v for v in used if v not in bound]
    full = [(EXISTS, f"v{v}") for v in free] + [(q, f"v{v}") for q, v in prefix]
    logger.debug(f"Read QDIMACS with {len(full)} variables and {len(clauses)} clauses")
    return QbfFormula(tuple(full), cnf_matrix(clauses))


def random_qbf(variables: int, clauses: int, seed: int = 0, clause_size: int = 3) -> QbfFormula:
    """Random prenex CNF with a random prefix, for stress runs."""
    rng = random.Random(seed)
    prefix = tuple((FORALL if rng.random() < 0.5 else EXISTS, f"v{v}") for v in range(1, variables + 1))
    rows = []
    for _ in range(clauses):
        picked = rng.sample(range(1, variables + 1), min(clause_size, variables))
        rows.append([v if rng.random() < 0.5 else -v for v in picked])
    return QbfFormula(prefix, cnf_matrix(rows))
