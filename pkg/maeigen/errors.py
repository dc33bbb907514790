"""Exception hierarchy shared by every maeigen module."""
from __future__ import annotations


class MAEigenError(Exception):
    """Base class for all library errors."""


class DomainError(MAEigenError):
    """Invalid or unparsable domain description."""

    def __init__(self, message: str, *, vertex: int | None = None):
        super().__init__(message)
        self.vertex = vertex


class GridError(MAEigenError):
    """The requested discretization cannot be built."""


class NegativeDensity(MAEigenError):
    """A right-hand side density is negative somewhere."""


class NonConvergence(MAEigenError):
    """An iterative solver exhausted its budget.

    ``residual`` is the last sup-norm residual (or successive difference),
    ``iterations`` the work done, ``step`` the outer iteration index when the
    failure happened inside a nested solve.
    """

    def __init__(
        self,
        message: str,
        *,
        residual: float,
        iterations: int,
        step: int | None = None,
        hint: str = "",
    ):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.step = step
        self.hint = hint

    def __str__(self) -> str:
        text = f"{self.args[0]} (residual={self.residual:.3e}, iterations={self.iterations}"
        if self.step is not None:
            text += f", step={self.step}"
        text += ")"
        if self.hint:
            text += f": {self.hint}"
        return text


class ZeroFunction(MAEigenError):
    """A functional was evaluated on the zero function."""


class DegenerateStart(MAEigenError):
    """The inverse iteration was started from u0 = 0."""


class InvalidSpec(MAEigenError):
    """A measure, semilinear right-hand side or expression is inconsistent."""


class NoBracket(MAEigenError):
    """Shooting could not bracket a sign change."""


class AllSubcritical(MAEigenError):
    """Every tried lambda produced a bounded solution."""


class AllSupercritical(MAEigenError):
    """Even the smallest tried lambda blew up."""


class DegeneratePosition(MAEigenError):
    """Piecewise-linear input is not in general position."""
