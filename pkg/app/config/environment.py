"""Environment variable overrides."""

from typing import Optional

from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationError

VALID_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
VALID_FORMATS = ("json", "key-value")


class EnvironmentConfig(BaseSettings):
    """Settings read from MERGE_STATES_* environment variables.

    Variables:
    - MERGE_STATES_LOG_LEVEL: Override log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    - MERGE_STATES_LOG_FORMAT: Override log format (json, key-value)
    - MERGE_STATES_ENVIRONMENT: Label stamped on every log record (default: local)
    - MERGE_STATES_WORKERS: Thread count for E-steps and evaluation protocols
    """

    model_config = SettingsConfigDict(env_prefix="MERGE_STATES_", extra="ignore")

    log_level: Optional[str] = None
    log_format: Optional[str] = None
    environment: str = "local"
    workers: Optional[int] = Field(None, ge=1)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: Optional[str]) -> Optional[str]:
        if v is None:
            return v
        if v.upper() not in VALID_LEVELS:
            raise ValueError(f"must be one of: {', '.join(VALID_LEVELS)}")
        return v.upper()

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: Optional[str]) -> Optional[str]:
        if v is None:
            return v
        if v.lower() not in VALID_FORMATS:
            raise ValueError(f"must be one of: {', '.join(VALID_FORMATS)}")
        return v.lower()


def load_environment_config() -> EnvironmentConfig:
    """
    Load and validate environment overrides.

    Returns:
        EnvironmentConfig with validated values

    Raises:
        ConfigurationError: If a variable is set to an invalid value
    """
    try:
        return EnvironmentConfig()
    except ValidationError as e:
        errors = [
            f"MERGE_STATES_{str(error['loc'][0]).upper()}: {error['msg']}" for error in e.errors()
        ]
        raise ConfigurationError(
            "Environment variable validation failed",
            errors=errors,
            suggestions=[
                "Unset the variable to fall back to the configuration file",
                "MERGE_STATES_WORKERS must be a positive integer",
            ],
        ) from e
