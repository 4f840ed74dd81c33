"""Exceptions raised while reading recordings and building corpora."""

from typing import List, Optional, Tuple


class DataError(Exception):
    """Base exception for data ingestion and corpus errors."""

    pass


class TrackFormatError(DataError):
    """A track or label file is malformed.

    Carries one entry per rejected row, each prefixed with its 1-based line
    number in the source file (the header is line 1).
    """

    def __init__(self, message: str, errors: Optional[List[str]] = None) -> None:
        self.message = message
        self.errors = errors or []
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        parts = [self.message]
        for error in self.errors:
            parts.append(f"  - {error}")
        return "\n".join(parts)


class ExtractionError(DataError):
    """A merge event cannot be extracted because vehicles are missing at some frames.

    Attributes:
        gaps: (role, timestamp_ms) pairs for every missing vehicle frame
    """

    def __init__(self, message: str, gaps: Optional[List[Tuple[str, int]]] = None) -> None:
        super().__init__(message)
        self.gaps = gaps or []


class InvalidSynthSpecError(DataError):
    """The synthetic generator configuration is inconsistent."""

    pass


class CorpusFormatError(DataError):
    """A corpus directory is missing files or has inconsistent contents."""

    pass
