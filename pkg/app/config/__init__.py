"""Settings of merge-states: YAML file sections plus MERGE_STATES_* overrides."""

from .environment import EnvironmentConfig, load_environment_config
from .exceptions import ConfigurationError
from .loader import DEFAULT_LOCATIONS, load_config, validate_config_file
from .models import (
    AppConfig,
    DataConfig,
    EvaluationSettings,
    LogFormat,
    LoggingConfig,
    LogLevel,
    SelectionConfig,
)
from .validators import check_for_warnings

__all__ = [
    "load_config",
    "validate_config_file",
    "load_environment_config",
    "check_for_warnings",
    "DEFAULT_LOCATIONS",
    # Sections
    "AppConfig",
    "DataConfig",
    "SelectionConfig",
    "EvaluationSettings",
    "LoggingConfig",
    "EnvironmentConfig",
    "LogLevel",
    "LogFormat",
    "ConfigurationError",
]
