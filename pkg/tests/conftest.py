import pytest

from cegis.types import SolverConfig
from formula.parser import parse_formula
from formula.skolem import skolemize

# P(x) = x & (x - 1) at a width small enough to verify exhaustively
CLEAR_LOWEST_BIT = """
(width 4)
(exists-fun P (arity 1))
(forall x)
(assert (eq (app P x) (and x (sub x 1))))
"""

# No function can differ from itself
CONTRADICTION = """
(width 1)
(exists-fun P (arity 1))
(forall x)
(assert (neq (app P x) (app P x)))
"""

# forall x exists y. y = x + 1
SUCCESSOR = """
(width 3)
(forall x)
(exists y)
(assert (eq y (add x 1)))
"""


def instance_of(text: str, label: str = "test", enable_shl: bool = False):
    return skolemize(parse_formula(text), label=label, enable_shl=enable_shl)


@pytest.fixture
def explicit_config():
    """Single-strategy deterministic run, small enough for unit tests."""
    return SolverConfig(strategies=["explicit"], deterministic=True, timeout=120, initial_width=2)


@pytest.fixture
def race_config():
    return SolverConfig(strategies=["explicit", "symbolic"], deterministic=True, timeout=120, initial_width=2)


@pytest.fixture
def clear_lowest_bit():
    return instance_of(CLEAR_LOWEST_BIT, label="clear-lowest-bit")


@pytest.fixture
def contradiction():
    return instance_of(CONTRADICTION, label="contradiction")


@pytest.fixture
def successor():
    return instance_of(SUCCESSOR, label="successor")
