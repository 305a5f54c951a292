"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class DualRiskError(Exception):
    """Base class for all package errors."""


class DomainError(DualRiskError, ValueError):
    """Argument outside the domain of a function."""


class InvalidBracket(DualRiskError, ValueError):
    """Predicate does not switch from true to false across the bracket."""


class NoSignChange(DualRiskError, ValueError):
    """Continuous root search given a bracket without a sign change."""


class NonFinite(DualRiskError, ArithmeticError):
    """A NaN appeared, or the search ended on an infinite function value."""


class NonConvergent(DualRiskError, ArithmeticError):
    """Successive quadrature refinements disagree beyond tolerance."""


class ConvergenceError(DualRiskError, ArithmeticError):
    """An iterative solver ran out of iterations."""


class UnsupportedRepresentation(DualRiskError, TypeError):
    """Operation cannot be expressed in the requested representation."""


class Unsupported(DualRiskError, TypeError):
    """Operation is not defined for this object (e.g. inverse marginal of a linear utility)."""


class BracketFailure(DualRiskError, RuntimeError):
    """No bracket for the budget multiplier could be found within the growth limit."""


class NoBracket(DualRiskError, RuntimeError):
    """The outer search could not observe phi < 1 for small risk aversion."""


class Infeasible(DualRiskError):
    """Surplus level at or above the well-posedness threshold."""

    def __init__(self, y: float, y_hat: float):
        self.y = y
        self.y_hat = y_hat
        super().__init__(f"surplus y={y:.12g} is not below the threshold y_hat={y_hat:.12g}")


class SchemaError(DualRiskError, ValueError):
    """Input file does not match the documented schema."""
