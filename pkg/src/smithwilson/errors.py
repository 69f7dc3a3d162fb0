"""Exception types shared across the package."""

from __future__ import annotations


class ValidationError(ValueError):
    """Invalid input: bad parameters, malformed instruments or files."""


class DomainError(ValueError):
    """A curve quantity is undefined at the requested term (e.g. non-positive price)."""

    def __init__(self, message: str, term: float):
        super().__init__(f"{message} (term={term!r})")
        self.term = term


class SolverError(RuntimeError):
    """Base class for numerical failures."""


class SingularMatrixError(SolverError):
    """Linear system is singular to working precision."""

    def __init__(self, message: str, pivot: float, index: int | None = None):
        super().__init__(f"{message} (pivot magnitude {pivot:.3e})")
        self.pivot = pivot
        self.index = index


class IntegrationError(SolverError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message}: estimate={estimate!r}, error bound={error!r}")
        self.estimate = estimate
        self.error = error


class UnsupportedOperationError(ValidationError):
    """Operation not defined for this curve kind or instrument mix."""


class ParseError(ValidationError):
    """Malformed input file; carries the 1-based line and the column name."""

    def __init__(self, message: str, line: int | None = None, column: str | None = None, source: str = "<input>"):
        where = source
        if line is not None:
            where += f":{line}"
        if column is not None:
            where += f" [{column}]"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column
        self.source = source
