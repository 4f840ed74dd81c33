"""Configuration loader for merge-states.

Settings come from three layers: an optional YAML file, MERGE_STATES_*
environment variables and command-line flags. This module reads the first two;
app.main applies the flags on top.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import ValidationError

from .environment import EnvironmentConfig, load_environment_config
from .exceptions import ConfigurationError
from .models import AppConfig
from .validators import check_for_warnings, emit_warnings

DEFAULT_LOCATIONS = (Path("config.yaml"), Path("config") / "config.yaml")

TYPE_ERRORS = ("string_type", "int_type", "float_type", "bool_type", "list_type", "dict_type")


def load_config(config_path: Optional[Path] = None) -> tuple[AppConfig, EnvironmentConfig]:
    """
    Load and validate configuration from a YAML file and environment variables.

    The file is optional. Lookup order:
    1. config_path if given (it must exist)
    2. ./config.yaml
    3. ./config/config.yaml
    4. Built-in defaults

    Args:
        config_path: Optional path to configuration file

    Returns:
        Tuple of (AppConfig, EnvironmentConfig) with validated configuration

    Raises:
        ConfigurationError: If the file or an environment variable is invalid
    """
    config_file = _find_config_file(config_path)
    sections = _read_sections(config_file)

    warnings = check_for_warnings(sections)
    if warnings:
        emit_warnings(warnings)

    return _validate(sections, config_file), load_environment_config()


def validate_config_file(config_path: Path) -> AppConfig:
    """
    Validate a configuration file without reading environment variables.

    Raises:
        ConfigurationError: If the file is missing or invalid
    """
    config_file = _find_config_file(config_path)
    return _validate(_read_sections(config_file), config_file)


def _find_config_file(config_path: Optional[Path] = None) -> Optional[Path]:
    """The file to read, or None when only defaults apply."""
    if config_path:
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigurationError(
                f"Specified configuration file not found: {config_path}",
                suggestions=[
                    f"Ensure {config_path} exists",
                    "Omit --config to run with built-in defaults",
                ],
            )
        return config_path
    return next((candidate for candidate in DEFAULT_LOCATIONS if candidate.exists()), None)


def _read_sections(config_file: Optional[Path]) -> Dict[str, Any]:
    """Top-level mapping of the file; empty for no file or an empty file."""
    if config_file is None:
        return {}
    try:
        raw = yaml.safe_load(config_file.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigurationError(
            f"Failed to parse YAML configuration: {e}",
            suggestions=[
                "Check YAML syntax in your config file",
                "Ensure proper indentation (use spaces, not tabs)",
            ],
            source=config_file,
        ) from e
    except OSError as e:
        raise ConfigurationError(
            f"Failed to read configuration file: {e}", source=config_file
        ) from e

    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigurationError(
            "Configuration must be a mapping of sections "
            "(training, data, selection, evaluation, synth, logging)",
            suggestions=["Review config.example.yaml for the expected layout"],
            source=config_file,
        )
    return raw


def _describe(error: Dict[str, Any]) -> str:
    field_path = " -> ".join(str(loc) for loc in error["loc"])
    error_type = error["type"]
    if error_type == "missing":
        return f"Missing required field: {field_path}"
    if error_type == "extra_forbidden":
        return f"Unknown setting: {field_path}"
    if error_type in TYPE_ERRORS:
        expected = error_type.removesuffix("_type")
        return f"Invalid type for '{field_path}': expected {expected}, got {error.get('input')!r}"
    return f"{field_path}: {error['msg']}"


def _validate(sections: Dict[str, Any], config_file: Optional[Path] = None) -> AppConfig:
    try:
        return AppConfig.model_validate(sections)
    except ValidationError as e:
        errors: List[str] = [_describe(error) for error in e.errors()]
        raise ConfigurationError(
            "Configuration validation failed",
            errors=errors,
            suggestions=[
                "Review config.example.yaml for correct format",
                "Known features: dv_lead, dx_lag, vx_ego, vy_ego, dv_lag, dx_lead",
            ],
            source=config_file,
        ) from e
