from __future__ import annotations

from collections.abc import Iterator
from pathlib import Path

import pytest

from spkmargin.core.config import get_settings


@pytest.fixture(autouse=True)
def configure_environment(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> Iterator[None]:
    monkeypatch.setenv("LOG_RICH", "false")
    monkeypatch.setenv("LOG_JSON", "false")
    monkeypatch.setenv("LOG_LEVEL", "WARNING")
    monkeypatch.setenv("SPK_WORK_DIR", str(tmp_path / "experiments"))
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
