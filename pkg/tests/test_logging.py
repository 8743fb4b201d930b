from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import orjson

from spkmargin.core.logging import LOG_FILE_NAME, bind_run_context, get_logger, setup_logging


def _records(path: Path) -> list[dict[str, object]]:
    return [orjson.loads(line) for line in path.read_bytes().splitlines() if line.strip()]


def test_json_file_carries_structured_fields(tmp_path: Path) -> None:
    setup_logging(rich_enabled=False, json_enabled=True, level="INFO", log_dir=tmp_path)
    try:
        bind_run_context(command="train")
        get_logger("spkmargin.test").info("train.epoch", stage="train", epoch=2, loss=np.float64(1.25), result="success")
        get_logger("spkmargin.test").debug("hidden.event")
    finally:
        setup_logging(rich_enabled=False, json_enabled=False, level="WARNING")

    records = _records(tmp_path / LOG_FILE_NAME)
    assert len(records) == 1
    record = records[0]
    assert record["msg"] == "train.epoch"
    assert record["command"] == "train"
    assert record["epoch"] == 2
    assert record["loss"] == 1.25
    assert record["outcome"] == "success"
    assert record["step"] is None
    assert record["level"] == "info"


def test_setup_logging_replaces_handlers(tmp_path: Path) -> None:
    setup_logging(rich_enabled=True, json_enabled=True, log_dir=tmp_path)
    assert len(logging.getLogger().handlers) == 2

    setup_logging(rich_enabled=False, json_enabled=False, level="WARNING")
    assert logging.getLogger().handlers == []
    assert logging.getLogger().level == logging.WARNING
