"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ExtremalError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(ExtremalError, ValueError):
    """Model or solver parameters violate a documented invariant."""


class DomainError(ExtremalError, ValueError):
    """An argument lies outside the domain of the operation."""


class EvaluationError(ExtremalError, ArithmeticError):
    """A user-supplied function returned NaN (or an unusable value)."""

    def __init__(self, message: str, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa


class ConvergenceError(ExtremalError, ArithmeticError):
    """An iterative method gave up; ``partial`` holds the last estimate."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
