"""Lifting witnesses verified at a small width to the target width.

Instructions are kept; only constants are rewritten, slot by slot, by a fixed
list of extension rules. Every proposal is fully verified before it is returned.
"""

import itertools
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from config import GENERALIZE_TRIAL_CAP
from formula.ast import Assignment, SynthesisInstance
from formula.evaluate import evaluate_body
from lang.machine import mask
from lang.program import Program, with_width
from synthesis.sat_backend import SatBackend
from utils.errors import TrialCapExceeded
from utils.logger import setup_logger
from verification.counterexample import CexSearchPlan, default_plan, find_counterexample

logger = setup_logger("verification")


@dataclass(frozen=True)
class ExtensionRule:
    name: str
    # (value, small width, target width) -> lifted value, or None when the rule does not apply
    lift: Callable[[int, int, int], Optional[int]]


def _preserve(v: int, w: int, W: int) -> Optional[int]:
    return v


def _sign_extend(v: int, w: int, W: int) -> Optional[int]:
    if v >> (w - 1) & 1:
        return v | (mask(W) ^ mask(w))
    return v


def _all_ones(v: int, w: int, W: int) -> Optional[int]:
    return mask(W) if v == mask(w) else None


def _sign_bit(v: int, w: int, W: int) -> Optional[int]:
    return 1 << (W - 1) if v == 1 << (w - 1) else None


def _width_minus_one(v: int, w: int, W: int) -> Optional[int]:
    return W - 1 if v == w - 1 else None


def _width(v: int, w: int, W: int) -> Optional[int]:
    return W if v == w else None


def _repeat(v: int, w: int, W: int) -> Optional[int]:
    out = 0
    for shift in range(0, W, w):
        out |= v << shift
    return out & mask(W)


EXTENSION_RULES: Tuple[ExtensionRule, ...] = (
    ExtensionRule("value-preserve", _preserve),
    # zero extension is value preservation on unsigned words
    ExtensionRule("zero-extend", _preserve),
    ExtensionRule("sign-extend", _sign_extend),
    ExtensionRule("all-ones", _all_ones),
    ExtensionRule("sign-bit", _sign_bit),
    ExtensionRule("width-minus-one", _width_minus_one),
    ExtensionRule("width", _width),
    ExtensionRule("bit-repeat", _repeat),
)


def lifted_values(value: int, w_small: int, w_target: int,
                  rules: Sequence[ExtensionRule] = EXTENSION_RULES) -> List[int]:
    """Distinct rule outputs for one constant, in rule order."""
    out: List[int] = []
    for rule in rules:
        lifted = rule.lift(value, w_small, w_target)
        if lifted is None:
            continue
        lifted &= mask(w_target)
        if lifted not in out:
            out.append(lifted)
    return out


def constant_slots(witnesses: Mapping[str, Program]) -> List[Tuple[str, int]]:
    return [(name, k) for name in sorted(witnesses) for k in range(len(witnesses[name].constants))]


def proposals(witnesses: Mapping[str, Program], w_small: int, w_target: int,
              trial_cap: int = GENERALIZE_TRIAL_CAP):
    """Lifted witness maps, Cartesian over constant slots; raises TrialCapExceeded past the cap."""
    slots = constant_slots(witnesses)
    choices = [lifted_values(witnesses[name].constants[k], w_small, w_target) for name, k in slots]
    for trial, combo in enumerate(itertools.product(*choices)):
        if trial >= trial_cap:
            raise TrialCapExceeded(f"Constant generalisation stopped after {trial_cap} trials")
        values: Dict[str, List[int]] = {name: list(p.constants) for name, p in witnesses.items()}
        for (name, k), value in zip(slots, combo):
            values[name][k] = value
        yield {name: with_width(p, w_target, values[name]) for name, p in witnesses.items()}


def generalize_constants(witnesses: Mapping[str, Program], instance: SynthesisInstance, w_small: int,
                         w_target: int, trial_cap: int = GENERALIZE_TRIAL_CAP,
                         inputs: Sequence[Assignment] = (), plan: Optional[CexSearchPlan] = None,
                         backend: Optional[SatBackend] = None, cancel: Optional[threading.Event] = None,
                         deadline: Optional[float] = None) -> Optional[Dict[str, Program]]:
    """First lifted witness map that passes full verification at the target width, or None.

    Stored inputs screen proposals before the full check.
    """
    if w_small >= w_target:
        raise ValueError(f"Nothing to generalise from width {w_small} to {w_target}")
    plan = plan or default_plan(instance, w_target)
    trials = 0
    try:
        for lifted in proposals(witnesses, w_small, w_target, trial_cap):
            trials += 1
            if not all(p.is_valid for p in lifted.values()):
                continue
            if not all(evaluate_body(instance.body, a, lifted, w_target) for a in inputs):
                continue
            if find_counterexample(lifted, instance, w_target, plan, backend, cancel, deadline) is None:
                logger.debug(f"Generalised to width {w_target} after {trials} trials")
                return lifted
    except TrialCapExceeded as e:
        logger.debug(str(e))
        return None
    logger.debug(f"No generalisation to width {w_target} among {trials} trials")
    return None
