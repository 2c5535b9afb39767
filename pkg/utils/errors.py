"""Exceptions raised across the solver."""

from typing import Optional


class SosatError(Exception):
    """Base class for every error the solver raises on purpose."""


class UnsupportedWidth(SosatError):
    """An opcode was evaluated at a word width it is not defined for."""


class MalformedProgram(SosatError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations) or "malformed program")


class _PositionedError(SosatError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class ProgramSyntaxError(_PositionedError):
    pass


class FormulaSyntaxError(_PositionedError):
    pass


class UnknownSymbol(SosatError):
    pass


class ArityMismatch(SosatError):
    pass


class WidthMismatch(SosatError):
    pass


class CapacityError(SosatError):
    """The propositional encoding would exceed the configured ceiling."""


class DecodeMismatch(SosatError):
    """A decoded model does not re-execute correctly: the encoder is wrong."""


class BackendUnavailable(SosatError):
    pass


class BackendTimeout(SosatError):
    pass


class TrialCapExceeded(SosatError):
    pass


class SolverInternalError(SosatError):
    """Invariant breakage inside the refinement loop (e.g. a repeated counterexample)."""


class SearchCancelled(SosatError):
    """A search was stopped from outside before it reached a verdict."""
