"""Additional validation utilities for configuration."""

import warnings
from typing import Any, Dict, List

K_MAX_WARNING = 12
ALIGN_LENGTH_WARNING = 10
TRAIN_FRACTION_RANGE = (0.5, 0.95)


def _section(config_dict: Dict[str, Any], name: str) -> Dict[str, Any]:
    section = config_dict.get(name, {})
    return section if isinstance(section, dict) else {}


def check_for_warnings(config_dict: Dict[str, Any]) -> List[str]:
    """
    Check configuration for valid but suspicious settings and return warnings.

    Args:
        config_dict: Raw configuration dictionary

    Returns:
        List of warning messages
    """
    warning_messages = []

    k_max = _section(config_dict, "selection").get("k_max")
    if isinstance(k_max, int) and k_max > K_MAX_WARNING:
        warning_messages.append(
            f"Large selection.k_max ({k_max}) makes the BIC scan slow and the "
            "largest models poorly determined"
        )

    data = _section(config_dict, "data")
    align_length = data.get("align_length")
    if isinstance(align_length, int) and align_length < ALIGN_LENGTH_WARNING:
        warning_messages.append(
            f"Short data.align_length ({align_length}) leaves few frames per state"
        )

    fraction = data.get("train_fraction")
    low, high = TRAIN_FRACTION_RANGE
    if isinstance(fraction, (int, float)) and not low <= fraction <= high:
        warning_messages.append(
            f"data.train_fraction ({fraction}) is outside [{low}, {high}]; "
            "one of the splits will be small"
        )

    training = _section(config_dict, "training")
    k = training.get("k")
    if isinstance(k, int) and isinstance(k_max, int) and k > k_max:
        warning_messages.append(f"training.k ({k}) lies outside the scanned range (k_max={k_max})")

    return warning_messages


def emit_warnings(warning_messages: List[str]) -> None:
    """
    Emit warning messages using Python's warnings module.

    Args:
        warning_messages: List of warning messages to emit
    """
    for message in warning_messages:
        warnings.warn(message, UserWarning, stacklevel=2)
