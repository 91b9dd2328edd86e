"""
Exception hierarchy for the ArCa toolchain.

Input problems (syntax, undeclared symbols, wrong formula class) derive from
ValueError so callers that only know the standard library still catch them.
"""

from typing import Optional


class ArcaError(Exception):
    """Root of every error raised by the package."""


class ArcaSyntaxError(ArcaError, ValueError):
    """Malformed surface syntax, reported with a 1-based position."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")


class SymbolError(ArcaError, ValueError):
    """Undeclared, duplicated or reserved symbol."""


class FormulaClassError(ArcaError, ValueError):
    """A procedure received a formula outside the class it decides."""


class EvaluationError(ArcaError, ValueError):
    """Finite evaluation failed (unvalued symbol, unbounded quantifier)."""


class EmissionError(ArcaError, ValueError):
    """A formula still contains arrays or counting terms at the solver boundary."""


class CertificateError(ArcaError, ValueError):
    """A certificate does not match the shape of the reduced form it claims to satisfy."""


class ResourceLimitError(ArcaError):
    """A configured cap (assignments, Venn cards, oracle candidates) was exceeded."""


class SystemSpecError(ArcaError, ValueError):
    """Invalid parametric system description."""


class ConfigError(ArcaError, ValueError):
    """Invalid configuration value."""


class SolverFailure(ArcaError):
    """The backend could not decide a query; procedures turn this into an Unknown verdict."""
