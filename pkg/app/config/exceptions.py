"""Configuration errors."""

from pathlib import Path
from typing import List, Optional


class ConfigurationError(Exception):
    """Invalid configuration file, environment override or training flag.

    Attributes:
        message: What failed
        errors: One entry per offending setting, as "<section -> field>: <reason>"
        suggestions: Hints printed after the errors
        source: Configuration file involved, if any
    """

    def __init__(
        self,
        message: str,
        errors: Optional[List[str]] = None,
        suggestions: Optional[List[str]] = None,
        source: Optional[Path] = None,
    ):
        self.message = message
        self.errors = list(errors or [])
        self.suggestions = list(suggestions or [])
        self.source = source
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        lines = [f"{self.source}: {self.message}" if self.source else self.message]
        if self.errors:
            lines.append("\nValidation Errors:")
            lines.extend(f"  {i}. {error}" for i, error in enumerate(self.errors, 1))
        if self.suggestions:
            lines.append("\nSuggestions:")
            lines.extend(f"  - {suggestion}" for suggestion in self.suggestions)
        return "\n".join(lines)
