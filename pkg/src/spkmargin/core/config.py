from __future__ import annotations

from functools import lru_cache
from pathlib import Path

from pydantic import AliasChoices, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import ConfigError


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables."""

    work_dir: Path = Field(
        Path("data/experiments"),
        description="Каталог по умолчанию для артефактов эксперимента",
        validation_alias=AliasChoices("SPK_WORK_DIR", "SPKMARGIN_WORK_DIR"),
    )
    log_level: str = Field("INFO", validation_alias=AliasChoices("LOG_LEVEL"))
    log_json: bool = Field(False, validation_alias=AliasChoices("LOG_JSON"))
    log_rich: bool = Field(True, validation_alias=AliasChoices("LOG_RICH"))
    log_dir: Path = Field(
        Path("logs"),
        description="Каталог для JSON-логов",
        validation_alias=AliasChoices("LOG_DIR"),
    )

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        case_sensitive=False,
    )


@lru_cache
def get_settings() -> Settings:
    """Return a cached instance of :class:`Settings`."""

    try:
        return Settings()
    except ValidationError as exc:
        raise ConfigError(f"Некорректные переменные окружения: {exc}") from exc
