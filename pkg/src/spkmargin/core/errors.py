"""Exception hierarchy shared by every module.

Each error carries the process exit code the CLI reports for it.
"""

from __future__ import annotations


class SpkError(RuntimeError):
    """Base class for expected, user-facing failures."""

    exit_code = 1


class ConfigError(SpkError, ValueError):
    """Raised when a configuration value is invalid or inconsistent."""

    exit_code = 2


class DataFormatError(SpkError):
    """Raised when an archive, trial list or score file cannot be parsed."""

    exit_code = 3


class DimensionError(SpkError, ValueError):
    """Raised on shape mismatches between matrices, archives or models."""

    exit_code = 3


class DomainError(SpkError, ValueError):
    """Raised when an argument lies outside the domain of an operation."""

    exit_code = 3


class UsageError(SpkError):
    """Raised when an API is called out of order (e.g. backward without forward)."""

    exit_code = 3


class NumericError(SpkError, ArithmeticError):
    """Raised when NaN/Inf appears or a matrix turns out singular."""

    exit_code = 4


__all__ = [
    "ConfigError",
    "DataFormatError",
    "DimensionError",
    "DomainError",
    "NumericError",
    "SpkError",
    "UsageError",
]
