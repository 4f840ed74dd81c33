"""Structured logging helpers shared by every package."""

import logging
from typing import Optional, Union


class ComponentLoggerAdapter(logging.LoggerAdapter):
    """LoggerAdapter that merges its component field with per-call extra fields."""

    def process(self, msg, kwargs):
        # Call-site extra takes precedence over the adapter's component
        kwargs["extra"] = {**self.extra, **kwargs.get("extra", {})}
        return msg, kwargs


def get_logger(
    name: str, component: Optional[str] = None
) -> Union[logging.Logger, ComponentLoggerAdapter]:
    """Get a logger, optionally stamping a component field on every record.

    Args:
        name: Logger name (typically __name__)
        component: Component identifier such as "learning" or "cli"

    Example:
        >>> logger = get_logger(__name__, component="learning")
        >>> logger.info("EM converged", extra={"event": "em.fit.converged", "iterations": 12})
    """
    logger = logging.getLogger(name)
    if component:
        return ComponentLoggerAdapter(logger, {"component": component})
    return logger
