"""Loop systems and their reductions to second-order formulas.

A loop is given relationally: an initial-state predicate I over the state x, a
guard G over x and a transition B over x and the primed state x'. Loop files
extend the formula grammar:

    (loop
      (width 8)
      (vars x)
      (init (eq x 0))
      (guard (lt x 10))
      (body (eq x' (add x 1)))
      (goal safety)
      (assert (eq x 10)))
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from config import TARGET_WIDTH
from formula.ast import (
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
    free_vars,
    substitute,
)
from formula.parser import ExprParser, parse_variables, parse_width
from formula.sexpr import SList, expect_atom, expect_list, read_all
from lang.machine import mask
from lang.opcodes import Opcode
from utils.errors import FormulaSyntaxError, UnknownSymbol
from utils.logger import setup_logger

logger = setup_logger("frontends")

SAFETY = "safety"
TERMINATION = "termination"
NONTERMINATION = "nontermination"
GOALS = (SAFETY, TERMINATION, NONTERMINATION)


def primed(name: str) -> str:
    return f"{name}'"


@dataclass(frozen=True)
class LoopSystem:
    state_vars: Tuple[Quantified, ...]
    init: BodyExpr
    guard: BodyExpr
    body: BodyExpr
    width: int

    def __post_init__(self):
        names = [v.name for v in self.state_vars]
        if not names:
            raise ValueError("A loop needs at least one state variable")
        if len(set(names)) != len(names):
            raise ValueError("State variables declared twice")
        for label, expr, allowed in (
            ("init", self.init, set(names)),
            ("guard", self.guard, set(names)),
            ("body", self.body, set(names) | {primed(n) for n in names}),
        ):
            stray = [v for v in free_vars(expr) if v not in allowed]
            if stray:
                raise UnknownSymbol(f"Loop {label} refers to undeclared {', '.join(stray)}")

    @property
    def current(self) -> List[BodyExpr]:
        return [Var(v.name) for v in self.state_vars]

    @property
    def next(self) -> List[BodyExpr]:
        return [Var(primed(v.name)) for v in self.state_vars]

    def prefix(self, with_next: bool = True) -> Tuple[Quantified, ...]:
        out = [Quantified(FORALL, v.name, v.width) for v in self.state_vars]
        if with_next:
            out += [Quantified(FORALL, primed(v.name), v.width) for v in self.state_vars]
        return tuple(out)

    def narrowed(self, expr: BodyExpr, var: Quantified) -> BodyExpr:
        """A word expression cut down to the domain of one state variable."""
        if var.width is not None and var.width < self.width:
            return Op(Opcode.AND, (expr, Lit(mask(var.width))))
        return expr


@dataclass(frozen=True)
class LoopFile:
    system: LoopSystem
    goal: str = SAFETY
    assertion: Optional[BodyExpr] = None


def _implies(premise: BodyExpr, conclusion: BodyExpr) -> BodyExpr:
    return BoolOp("bimplies", (premise, conclusion))


def _and(*parts: BodyExpr) -> BodyExpr:
    return conjoin(parts)


def encode_safety(loop: LoopSystem, assertion: BodyExpr) -> SOSFormula:
    """∃S. ∀x,x'. (I → S(x)) ∧ (S(x) ∧ G ∧ B → S(x')) ∧ (S(x) ∧ ¬G → A)."""
    stray = [v for v in free_vars(assertion) if v not in {s.name for s in loop.state_vars}]
    if stray:
        raise UnknownSymbol(f"Assertion refers to undeclared {', '.join(stray)}")
    n = len(loop.state_vars)
    s_x = App("S", tuple(loop.current))
    s_next = App("S", tuple(loop.next))
    body = _and(
        _implies(loop.init, s_x),
        _implies(_and(s_x, loop.guard, loop.body), s_next),
        _implies(_and(s_x, BoolOp("bnot", (loop.guard,))), assertion),
    )
    sig = FunctionSignature("S", n, 1, PREDICATE)
    return SOSFormula((sig,), loop.prefix(), body, loop.width)


def encode_termination(loop: LoopSystem) -> SOSFormula:
    """∃R,W. ∀x,x'. (I ∧ G → W(x)) ∧ (W(x) ∧ G ∧ B → W(x') ∧ R(x) > 0 ∧ R(x) > R(x')).

    The ranking order is unsigned, which is well-founded on words.
    """
    n = len(loop.state_vars)
    w_x = App("W", tuple(loop.current))
    w_next = App("W", tuple(loop.next))
    r_x = App("R", tuple(loop.current))
    r_next = App("R", tuple(loop.next))
    body = _and(
        _implies(_and(loop.init, loop.guard), w_x),
        _implies(
            _and(w_x, loop.guard, loop.body),
            _and(w_next, Op(Opcode.LT, (Lit(0), r_x)), Op(Opcode.LT, (r_next, r_x))),
        ),
    )
    sigs = (FunctionSignature("R", n, 1, FUNCTION), FunctionSignature("W", n, 1, PREDICATE))
    return SOSFormula(sigs, loop.prefix(), body, loop.width)


def initial_state_symbol(name: str) -> str:
    return f"x0_{name}"


def encode_nontermination(loop: LoopSystem) -> SOSFormula:
    """∃N,C,x0. ∀x. N(x0) ∧ (N(x) → G(x)) ∧ (N(x) → B(x, C(x)) ∧ N(C(x))).

    x0 is one arity-0 symbol per state variable; C maps a state to a state.
    """
    n = len(loop.state_vars)
    x0 = tuple(loop.narrowed(App(initial_state_symbol(v.name), ()), v) for v in loop.state_vars)
    step = tuple(
        loop.narrowed(App("C", tuple(loop.current), k), v) for k, v in enumerate(loop.state_vars)
    )
    n_x = App("N", tuple(loop.current))
    successor: Dict[str, BodyExpr] = {primed(v.name): step[k] for k, v in enumerate(loop.state_vars)}
    body = _and(
        App("N", x0),
        _implies(n_x, loop.guard),
        _implies(n_x, _and(substitute(loop.body, successor), App("N", step))),
    )
    sigs = [FunctionSignature("N", n, 1, PREDICATE), FunctionSignature("C", n, n, FUNCTION)]
    sigs += [FunctionSignature(initial_state_symbol(v.name), 0, 1, FUNCTION, v.width) for v in loop.state_vars]
    return SOSFormula(tuple(sigs), loop.prefix(with_next=False), body, loop.width)


def encode_loop(loop_file: LoopFile) -> SOSFormula:
    if loop_file.goal == SAFETY:
        return encode_safety(loop_file.system, loop_file.assertion)
    if loop_file.goal == TERMINATION:
        return encode_termination(loop_file.system)
    return encode_nontermination(loop_file.system)


def parse_loop(text: str, default_width: Optional[int] = None) -> LoopFile:
    forms = read_all(text)
    if len(forms) != 1 or not isinstance(forms[0], SList) or forms[0].head() != "loop":
        raise FormulaSyntaxError("A loop file holds exactly one (loop ...) form")
    width = default_width or TARGET_WIDTH
    goal = SAFETY
    state: List[Quantified] = []
    parts: Dict[str, SList] = {}

    for form in forms[0].items[1:]:
        form = expect_list(form, "a loop clause")
        head = form.head()
        if head == "width":
            width = parse_width(form)
        elif head == "vars":
            state.extend(parse_variables(form, FORALL))
        elif head == "goal":
            if len(form.items) != 2:
                raise FormulaSyntaxError("Expected (goal safety|termination|nontermination)", form.line, form.column)
            goal = expect_atom(form.items[1], "a goal").text
            if goal not in GOALS:
                raise FormulaSyntaxError(f"Unknown goal '{goal}'", form.line, form.column)
        elif head in ("init", "guard", "body", "assert"):
            if len(form.items) != 2:
                raise FormulaSyntaxError(f"Expected ({head} expr)", form.line, form.column)
            if head in parts:
                raise FormulaSyntaxError(f"Duplicate ({head} ...) clause", form.line, form.column)
            parts[head] = form
        else:
            raise FormulaSyntaxError(f"Unknown loop clause '{head}'", form.line, form.column)

    if not state:
        raise FormulaSyntaxError("Loop declares no (vars ...)")
    for clause in ("guard", "body"):
        if clause not in parts:
            raise FormulaSyntaxError(f"Loop is missing its ({clause} ...) clause")
    if goal == SAFETY and "assert" not in parts:
        raise FormulaSyntaxError("A safety goal needs an (assert ...) clause")

    names = [v.name for v in state]
    over_x = ExprParser(names, {})
    over_both = ExprParser(names + [primed(n) for n in names], {})
    init = over_x.parse(parts["init"].items[1]) if "init" in parts else BoolConst(True)
    guard = over_x.parse(parts["guard"].items[1])
    body = over_both.parse(parts["body"].items[1])
    assertion = over_x.parse(parts["assert"].items[1]) if "assert" in parts else None
    try:
        system = LoopSystem(tuple(state), init, guard, body, width)
    except ValueError as e:
        raise FormulaSyntaxError(str(e)) from None
    logger.debug(f"Parsed {goal} loop over {', '.join(names)} at width {width}")
    return LoopFile(system, goal, assertion)
