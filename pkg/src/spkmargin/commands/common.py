"""Helpers shared by the command implementations."""

from __future__ import annotations

import argparse
from pathlib import Path
from typing import Any

import orjson

from ..core.logging import get_logger
from ..domain.experiment import ExperimentConfig, coerce_flag_value, load_experiment_config

_logger = get_logger("commands")

_FLAG_PREFIX = "set_"


def flag_name(field: str) -> str:
    return "--" + field.replace("_", "-")


def add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    """``--config`` plus one flag per :class:`ExperimentConfig` field."""

    parser.add_argument("--config", type=Path, default=None, help="TOML file with experiment settings")
    group = parser.add_argument_group("experiment settings (override the config file)")
    for name, field in ExperimentConfig.model_fields.items():
        default = field.default
        if isinstance(default, tuple):
            default = ",".join(str(item) for item in default)
        group.add_argument(
            flag_name(name),
            dest=_FLAG_PREFIX + name,
            default=None,
            metavar=name.upper(),
            help=f"default: {default}",
        )


def experiment_from_args(args: argparse.Namespace) -> ExperimentConfig:
    overrides: dict[str, Any] = {}
    for name in ExperimentConfig.model_fields:
        raw = getattr(args, _FLAG_PREFIX + name, None)
        if raw is not None:
            overrides[name] = coerce_flag_value(name, raw)
    return load_experiment_config(getattr(args, "config", None), overrides)


def json_bytes(payload: Any) -> bytes:
    return orjson.dumps(payload, option=orjson.OPT_INDENT_2 | orjson.OPT_APPEND_NEWLINE)


def write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(json_bytes(payload))
    return path


def log_written(kind: str, path: Path, **fields: Any) -> None:
    _logger.info("artifact.written", kind=kind, file=str(path), outcome="success", **fields)


__all__ = ["add_experiment_flags", "experiment_from_args", "flag_name", "json_bytes", "log_written", "write_json"]
