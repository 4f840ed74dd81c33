"""Log record formatting and root-logger setup for the merge-states CLI.

Two line formats are supported:

    key-value   2026-01-05 10:12:03 [INFO] app.learning.em: HMM training finished converged=true k=3
    json        {"timestamp": "...", "level": "INFO", "message": "...", "k": 3, ...}

Numerical code logs numpy scalars, small arrays and non-finite scores (a failed
BIC candidate scores +inf); both formatters render them as plain values.
"""

import json
import logging
import math
import sys
from datetime import datetime, timezone
from typing import IO, Any, Dict, Literal, Optional

import numpy as np

from .context import get_log_context

LogFormat = Literal["json", "key-value"]

SERVICE_NAME = "merge-states"
KEY_VALUE_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
KEY_VALUE_DATEFMT = "%Y-%m-%d %H:%M:%S"

# Attributes every LogRecord carries; anything else is a structured field
STANDARD_ATTRS = frozenset(vars(logging.makeLogRecord({}))) | {"message", "asctime", "taskName"}


def coerce_value(value: Any) -> Any:
    """Convert numpy scalars and arrays into plain Python values; unknown types become str."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, datetime):
        return value.isoformat()
    if value is None or isinstance(value, (str, int, float, bool, list, dict)):
        return value
    return str(value)


def _json_safe(value: Any) -> Any:
    """Spell out nan and +/-inf, which JSON cannot carry as numbers."""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, list):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    return value


def _structured_fields(record: logging.LogRecord, skip=frozenset()) -> Dict[str, Any]:
    return {
        key: coerce_value(value)
        for key, value in record.__dict__.items()
        if key not in STANDARD_ATTRS and key not in skip and not key.startswith("_")
    }


class ContextualFilter(logging.Filter):
    """Stamps service and environment on every record and merges the active log_context.

    Fields passed as extra at the call site win over context fields of the same name.
    """

    def __init__(self, service: str = SERVICE_NAME, environment: str = "local"):
        super().__init__()
        self.service = service
        self.environment = environment

    def filter(self, record: logging.LogRecord) -> bool:
        record.service = self.service
        record.environment = self.environment
        for key, value in get_log_context().items():
            if not hasattr(record, key):
                setattr(record, key, value)
        return True


class JSONFormatter(logging.Formatter):
    """One JSON object per line: timestamp, level, message, then structured fields."""

    def format(self, record: logging.LogRecord) -> str:
        created = datetime.fromtimestamp(record.created, tz=timezone.utc)
        log_obj: Dict[str, Any] = {
            "timestamp": created.isoformat(timespec="milliseconds").replace("+00:00", "Z"),
            "level": record.levelname,
            "message": record.getMessage(),
            **_structured_fields(record),
        }
        if record.exc_info:
            log_obj["exc_info"] = self.formatException(record.exc_info)
        return json.dumps(_json_safe(log_obj), ensure_ascii=False, allow_nan=False)


class KeyValueFormatter(logging.Formatter):
    """Base format followed by the structured fields as sorted key=value pairs.

    Static fields (service, environment) are left out of human-readable lines.
    """

    STATIC_FIELDS = frozenset({"service", "environment"})

    def format(self, record: logging.LogRecord) -> str:
        base = super().format(record)
        fields = _structured_fields(record, skip=self.STATIC_FIELDS)
        if not fields:
            return base
        pairs = " ".join(f"{key}={self._format_value(fields[key])}" for key in sorted(fields))
        return f"{base} {pairs}"

    @staticmethod
    def _format_value(value: Any) -> str:
        if value is None:
            return "null"
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return f"{value:.6g}"
        if isinstance(value, str) and any(ch in value for ch in " =,"):
            return f'"{value}"'
        return str(value)


def _build_formatter(format_type: str) -> logging.Formatter:
    if format_type == "json":
        return JSONFormatter()
    if format_type == "key-value":
        return KeyValueFormatter(KEY_VALUE_FORMAT, datefmt=KEY_VALUE_DATEFMT)
    raise ValueError(f"Invalid log format: {format_type}. Must be 'json' or 'key-value'")


def configure_logging(
    level: str = "INFO",
    format_type: LogFormat = "key-value",
    environment: str = "local",
    stream: Optional[IO[str]] = None,
) -> None:
    """Replace the root logger's handlers with one formatted stream handler.

    Command outputs are files, so log lines go to stderr unless another
    stream is given.

    Raises:
        ValueError: If level or format_type is invalid
    """
    numeric_level = logging.getLevelNamesMapping().get(level.upper())
    if numeric_level is None:
        raise ValueError(f"Invalid log level: {level}")

    handler = logging.StreamHandler(stream if stream is not None else sys.stderr)
    handler.setFormatter(_build_formatter(format_type))
    handler.addFilter(ContextualFilter(environment=environment))

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    root_logger.handlers.clear()
    root_logger.addHandler(handler)

    logging.getLogger(__name__).debug(
        "Logging configured",
        extra={
            "event": "logging.configured",
            "component": "logging",
            "log_level": level.upper(),
            "log_format": format_type,
        },
    )
