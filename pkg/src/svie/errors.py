"""Exception hierarchy shared by all svie modules."""

from __future__ import annotations

__all__ = [
    "SvieError",
    "ConfigurationError",
    "ConfigParseError",
    "NumericalError",
    "DomainError",
    "ExplosionError",
    "AnalysisError",
]


class SvieError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SvieError):
    """A model object or argument violates a documented precondition."""


class ConfigParseError(ConfigurationError):
    """A run-configuration file is malformed; the message names the field."""


class NumericalError(SvieError):
    """A numerical routine failed to reach its accuracy target."""


class DomainError(SvieError):
    """A quantity left the domain on which an operation is defined."""


class ExplosionError(NumericalError):
    """A simulated path produced a non-finite value.

    Attributes
    ----------
    grid_index : int
        First grid index at which the state became non-finite.
    """

    def __init__(self, grid_index: int, message: str | None = None):
        self.grid_index = int(grid_index)
        super().__init__(message or f"path exploded at grid index {grid_index}")


class AnalysisError(SvieError):
    """A verification routine could not produce a meaningful verdict."""
