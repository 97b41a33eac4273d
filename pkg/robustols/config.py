"""Runtime configuration helpers."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Any

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical tolerances and experiment defaults loaded from environment variables."""

    app_name: str = "robustols"
    version: str = "1.0.0"
    output_dir: Path = Field(default_factory=lambda: Path.cwd().joinpath("output"))
    default_level: float = Field(default=0.95, gt=0.0, lt=1.0)
    rank_tolerance: float = Field(default=1e-10, gt=0.0)
    kernel_weight_floor: float = Field(default=1e-15, ge=0.0)
    tv_block_size: int = Field(default=256, ge=1)
    mass_warning_ratio: float = Field(default=0.1, ge=0.0)
    garch_burn_in: int = Field(default=1000, ge=0)
    arfima_truncation: int = Field(default=200_000, ge=1)
    ar_burn_in: int = Field(default=500, ge=0)
    eta_presample: int = Field(default=200, ge=0)
    max_failure_rate: float = Field(default=0.01, ge=0.0, le=1.0)
    default_h_exponent: float = Field(default=0.5, gt=0.0, lt=1.0)
    empirical_h_exponent: float = Field(default=0.6, gt=0.0, lt=1.0)
    threads: int = Field(default=1, ge=1)
    table_decimals: int = Field(default=5, ge=0)

    model_config = SettingsConfigDict(
        env_prefix="ROBUSTOLS_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    def ensure_output_dir(self, path: Path | None = None) -> Path:
        """Create and return the directory where CSV outputs are written."""

        target = (path or self.output_dir).resolve()
        target.mkdir(parents=True, exist_ok=True)
        return target


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the cached settings instance."""

    return Settings()  # type: ignore[call-arg]


def override_settings(**kwargs: Any) -> Settings:
    """Utility used in tests to override selective configuration values."""

    data = Settings().model_dump()
    data.update(kwargs)
    return Settings(**data)
