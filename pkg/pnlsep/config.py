"""
Application configuration module.
"""

import logging
from pathlib import Path
from typing import Literal, Optional

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from pnlsep.exceptions import ConfigError, StorageError
from pnlsep.models.schemas import RunConfig


LOG_LEVELS = {
    "quiet": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",  # Allow extra fields to be ignored
        populate_by_name=True,
    )

    # Application Configuration
    APP_NAME: str = Field(default="pnlsep")

    # Logging Configuration
    LOG_LEVEL: Literal["quiet", "info", "debug"] = Field(default="info", validation_alias="PNL_LOG")
    LOG_FORMAT: str = Field(default="%(message)s")
    LOG_JSON: bool = Field(default=False)

    # Output Configuration
    CSV_PRECISION: int = Field(default=17, ge=1, le=17)
    SIR_CAP_DB: float = Field(default=150.0, gt=0)

    # Run configuration file used when --config is not given
    RUN_CONFIG_PATH: str = Field(default="run_config.json")


# Create settings instance
settings = Settings()


def get_log_level() -> int:
    """Get the stdlib logging level for the configured verbosity."""
    return LOG_LEVELS[settings.LOG_LEVEL]


def get_csv_precision() -> int:
    """Get the number of significant digits written to CSV files."""
    return settings.CSV_PRECISION


def get_sir_cap_db() -> float:
    """Get the ceiling applied to reported SIR values."""
    return settings.SIR_CAP_DB


def load_run_config(path: Optional[str] = None) -> RunConfig:
    """
    Load the run configuration document.

    Args:
        path: JSON file to read; defaults to settings.RUN_CONFIG_PATH

    Returns:
        RunConfig: Parsed configuration, or defaults when no path was given and
        the default file does not exist

    Raises:
        StorageError: If an explicitly given file cannot be read
        ConfigError: If the document is malformed or invalid
    """
    explicit = path is not None
    config_path = Path(path if explicit else settings.RUN_CONFIG_PATH)
    if not config_path.exists():
        if explicit:
            raise StorageError(f"run configuration not found: {config_path}", path=config_path)
        return RunConfig()
    try:
        raw = config_path.read_bytes()
    except OSError as e:
        raise StorageError(f"cannot read run configuration {config_path}: {e.strerror}", path=config_path)
    try:
        return RunConfig.model_validate_json(raw)
    except ValidationError as e:
        # Keep the first problem only, it names the offending field
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "document"
        raise ConfigError(f"invalid run configuration {config_path}: {location}: {first['msg']}")
