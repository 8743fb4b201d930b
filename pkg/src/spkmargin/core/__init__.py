"""Configuration, logging and error primitives."""

from .config import Settings, get_settings
from .errors import (
    ConfigError,
    DataFormatError,
    DimensionError,
    DomainError,
    NumericError,
    SpkError,
    UsageError,
)
from .logging import bind_run_context, get_logger, json_dumps, setup_logging

__all__ = [
    "ConfigError",
    "DataFormatError",
    "DimensionError",
    "DomainError",
    "NumericError",
    "Settings",
    "SpkError",
    "UsageError",
    "bind_run_context",
    "get_logger",
    "get_settings",
    "json_dumps",
    "setup_logging",
]
