"""structlog setup: rich console lines for people, rotating JSON lines for tools."""

from __future__ import annotations

import logging
from collections.abc import MutableMapping
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Any, cast

import orjson
import structlog
from rich.console import Console
from rich.logging import RichHandler
from structlog.typing import EventDict, Processor, WrappedLogger

LOG_FILE_NAME = "spkmargin.json"

_LEVEL_MARK = {
    "debug": "🔍",
    "info": "🟢",
    "warning": "🟡",
    "error": "🔴",
    "exception": "🔴",
    "critical": "🔴",
}

# Always present in JSON records so downstream filters can rely on the keys.
_JSON_FIELDS = ("command", "stage", "epoch", "step", "outcome", "exception", "stack")

_CONSOLE_FIELDS = ("command", "stage", "epoch", "step", "loss", "eer", "duration_ms", "outcome")


def json_dumps(obj: Any) -> bytes:
    return orjson.dumps(
        obj,
        option=orjson.OPT_APPEND_NEWLINE | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS,
        default=str,
    )


def _result_to_outcome(_: WrappedLogger, __: str, event_dict: EventDict) -> EventDict:
    if "result" in event_dict:
        event_dict["outcome"] = event_dict.pop("result")
    return event_dict


def _fill_json_fields(_: WrappedLogger, __: str, event_dict: EventDict) -> EventDict:
    for key in _JSON_FIELDS:
        event_dict.setdefault(key, None)
    event_dict.setdefault("logger", "spkmargin")
    if "event" in event_dict:
        event_dict.setdefault("msg", event_dict.pop("event"))
    return event_dict


def _console_line(_: WrappedLogger, __: str, event_dict: MutableMapping[str, Any]) -> str:
    mark = _LEVEL_MARK.get(str(event_dict.get("level", "info")).lower(), "🟢")
    context = [f"{key}={event_dict[key]}" for key in _CONSOLE_FIELDS if event_dict.get(key) is not None]
    suffix = f" [{' | '.join(context)}]" if context else ""
    return f"{event_dict.get('ts', '')} {mark} {event_dict.get('logger', 'spkmargin')}: {event_dict.get('msg', '')}{suffix}"


def _json_line(_: WrappedLogger, __: str, event_dict: MutableMapping[str, Any]) -> str:
    return json_dumps(dict(event_dict)).decode()


def _shared_processors() -> list[Processor]:
    return [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.stdlib.add_logger_name,
        structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S", utc=False, key="ts"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        _result_to_outcome,
        _fill_json_fields,
    ]


def _attach(
    root: logging.Logger,
    handler: logging.Handler,
    renderer: Processor,
    level: int,
    pre_chain: list[Processor],
) -> None:
    handler.setLevel(level)
    handler.setFormatter(
        structlog.stdlib.ProcessorFormatter(
            foreign_pre_chain=pre_chain,
            processors=[structlog.stdlib.ProcessorFormatter.remove_processors_meta, renderer],
        )
    )
    root.addHandler(handler)


def _rich_handler() -> RichHandler:
    return RichHandler(
        console=Console(stderr=True),
        rich_tracebacks=True,
        markup=False,
        show_path=False,
        show_time=False,
        show_level=False,
    )


def _file_handler(log_dir: Path) -> TimedRotatingFileHandler:
    log_dir.mkdir(parents=True, exist_ok=True)
    return TimedRotatingFileHandler(
        log_dir / LOG_FILE_NAME,
        when="midnight",
        interval=1,
        backupCount=7,
        encoding="utf-8",
    )


def setup_logging(
    *,
    rich_enabled: bool = True,
    json_enabled: bool = False,
    level: str | int = "INFO",
    log_dir: Path | None = None,
) -> None:
    """Route structlog through the stdlib root logger.

    Safe to call repeatedly: existing root handlers and bound context are dropped.
    """

    numeric_level = getattr(logging, level.upper(), logging.INFO) if isinstance(level, str) else int(level)
    processors = _shared_processors()

    root = logging.getLogger()
    root.handlers.clear()
    root.setLevel(numeric_level)
    if rich_enabled:
        _attach(root, _rich_handler(), _console_line, numeric_level, processors)
    if json_enabled:
        _attach(root, _file_handler(log_dir or Path("logs")), _json_line, numeric_level, processors)

    structlog.contextvars.clear_contextvars()
    structlog.configure(
        processors=[*processors, structlog.stdlib.ProcessorFormatter.wrap_for_formatter],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )


def bind_run_context(**fields: Any) -> None:
    """Attach *fields* (command, seed, ...) to every event logged afterwards."""

    structlog.contextvars.bind_contextvars(**fields)


def get_logger(name: str | None = None) -> structlog.stdlib.BoundLogger:
    return cast(structlog.stdlib.BoundLogger, structlog.get_logger(name))


__all__ = ["LOG_FILE_NAME", "bind_run_context", "get_logger", "json_dumps", "setup_logging"]
