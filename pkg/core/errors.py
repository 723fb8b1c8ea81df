from __future__ import annotations

from typing import Optional


class TailsError(Exception):
    """Base class for every error raised by the tail-probability toolkit."""


class DomainError(TailsError, ValueError):
    """An input violates a documented precondition."""


class UnsupportedError(TailsError):
    """The input is valid but the requested method does not cover it."""


class NoSolutionError(TailsError):
    """A root or split equation has no solution inside the searched bracket."""

    def __init__(
        self, message: str, *, feasible: Optional[tuple[float, float]] = None
    ) -> None:
        super().__init__(message)
        self.feasible = feasible


class AccuracyError(TailsError):
    """A quadrature or series did not reach the requested tolerance."""

    def __init__(
        self, message: str, *, best_estimate: float, achieved_tol: float
    ) -> None:
        super().__init__(
            f"{message} (best estimate {best_estimate!r}, achieved tolerance "
            f"{achieved_tol:.3g})"
        )
        self.best_estimate = best_estimate
        self.achieved_tol = achieved_tol


class EnvelopeError(TailsError):
    """The acceptance-rejection envelope could not be built or was exceeded."""


class ConfigError(TailsError, RuntimeError):
    """The environment or a configuration file holds an invalid value."""
