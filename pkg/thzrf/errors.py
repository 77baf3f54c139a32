"""
Error types raised across the toolkit.

Numerical evaluators raise these instead of returning NaN so that the sweep
runner can record a flag for the failing grid point and keep going.
"""

from typing import Optional


class ThzrfError(Exception):
    """Base class for all toolkit errors."""
    pass


class DomainError(ThzrfError, ValueError):
    """Argument outside the domain of a function or model."""
    pass


class EvaluationError(ThzrfError):
    """
    Numerical evaluation failed to reach the requested accuracy.

    Attributes:
        value: Best value obtained before giving up (may be NaN)
        bound: Estimate of the absolute error of ``value``
    """

    def __init__(self, message: str, value: float = float("nan"), bound: float = float("inf")):
        super().__init__(message)
        self.value = value
        self.bound = bound


class SeriesConvergenceError(EvaluationError):
    """Power series hit its iteration cap."""
    pass


class ConvergenceError(EvaluationError):
    """Contour refinement did not meet the tolerance."""
    pass


class ContourError(ThzrfError):
    """No vertical contour separates the left and right pole families."""
    pass


class NodeBudgetError(ThzrfError):
    """Quadrature would exceed the configured node budget."""
    pass


class AccuracyError(EvaluationError):
    """A result violates a property it must satisfy (realness, range)."""
    pass


class QuadratureError(EvaluationError):
    """Adaptive quadrature used by an oracle did not converge."""
    pass


class AbsorptionModelError(ThzrfError):
    """No absorption coefficient available for the requested carrier."""
    pass


class ConfigError(ThzrfError):
    """Invalid configuration file content."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        location = ""
        if path is not None and line is not None:
            location = f"{path}:{line}: "
        elif line is not None:
            location = f"line {line}: "
        super().__init__(f"{location}{message}")
        self.line = line
        self.path = path


class PoleWarning(UserWarning):
    """A parameter sits on a pole of an asymptotic expression and was perturbed."""
    pass


class StatisticsWarning(UserWarning):
    """Monte Carlo run too short for the error rate it measured."""
    pass
