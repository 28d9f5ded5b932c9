"""Workbench configuration with strict Pydantic settings."""

from __future__ import annotations

from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Workbench settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    epsilon: float = Field(default=0.001, gt=0, lt=1, alias="MMS_EPSILON")
    confidence: float = Field(default=0.99, gt=0, lt=1, alias="MMS_CONFIDENCE")
    seed: int = Field(default=0, ge=0, lt=2**64, alias="MMS_SEED")

    log_level: str = Field(default="INFO", alias="MMS_LOG_LEVEL")

    log_entry_bytes: int = Field(default=43, gt=0, alias="MMS_LOG_ENTRY_BYTES")
    measure_bits: int = Field(default=8, gt=0, le=64, alias="MMS_MEASURE_BITS")
    before_first_mask: int = Field(default=0, ge=0, lt=2**64, alias="MMS_BEFORE_FIRST_MASK")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Get cached workbench settings."""
    return Settings()
