"""Exception types shared across the package."""

from __future__ import annotations


class LinksimError(Exception):
    """Base class for all package errors."""


class ScenarioError(LinksimError, ValueError):
    """Invalid scenario text or a violated configuration invariant.

    ``field`` names the offending key when known; ``line`` is the 1-based
    line number in the scenario file when the error came from parsing.
    """

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        prefix = []
        if line is not None:
            prefix.append(f"line {line}")
        if field is not None:
            prefix.append(f"field '{field}'")
        full = f"{', '.join(prefix)}: {message}" if prefix else message
        super().__init__(full)


class GeometryError(ScenarioError):
    """Link geometry outside the supported flat-slab domain."""


class ModelDomainError(LinksimError, ValueError):
    """Input outside the validity range of an empirical model."""


class UnsupportedFrequencyError(ModelDomainError):
    """Carrier frequency not covered by the bundled rain-coefficient table."""


class NumericalError(LinksimError, ArithmeticError):
    """Quadrature or series evaluation failed to reach its tolerance.

    ``achieved`` carries the best error bound reached before giving up.
    """

    def __init__(self, message: str, *, achieved: float | None = None):
        self.achieved = achieved
        if achieved is not None:
            message = f"{message} (achieved bound {achieved:.3g})"
        super().__init__(message)


class FitDomainError(ModelDomainError):
    """Scintillation index outside the domain of the exponentiated Weibull fit."""
