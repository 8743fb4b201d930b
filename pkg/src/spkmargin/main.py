from __future__ import annotations

import sys
from collections.abc import Sequence

from .commands import build_parser
from .core.config import get_settings
from .core.errors import ConfigError, SpkError
from .core.logging import bind_run_context, get_logger, setup_logging

_IO_EXIT_CODE = 3


def main(argv: Sequence[str] | None = None) -> int:
    try:
        settings = get_settings()
    except ConfigError as exc:
        print(f"spkmargin: {exc}", file=sys.stderr)
        return exc.exit_code

    setup_logging(
        rich_enabled=settings.log_rich,
        json_enabled=settings.log_json,
        level=settings.log_level,
        log_dir=settings.log_dir,
    )
    args = build_parser(settings).parse_args(argv)
    bind_run_context(command=args.command)
    logger = get_logger(__name__)

    try:
        args.handler(args)
    except SpkError as exc:
        logger.error("command.failed", error=str(exc), error_type=type(exc).__name__, outcome="fail")
        print(f"spkmargin {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        logger.error("command.failed", error=str(exc), error_type=type(exc).__name__, outcome="fail")
        print(f"spkmargin {args.command}: {exc}", file=sys.stderr)
        return _IO_EXIT_CODE

    logger.info("command.done", outcome="success")
    return 0


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
