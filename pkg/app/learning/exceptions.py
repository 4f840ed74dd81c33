"""Exceptions raised while initializing and training models."""

from app.core.exceptions import NumericalError


class LearningError(Exception):
    """Base exception for all training errors."""

    pass


class InitializationError(LearningError):
    """Initial parameters could not be built from the sequences.

    Examples:
    - a sequence shorter than K leaves a K-bins bin empty
    - fewer pooled frames than requested clusters
    - sequences with different feature schemas
    """

    pass


class NumericalFailureError(LearningError, NumericalError):
    """EM produced a non-finite log-likelihood."""

    def __init__(self, message: str, iteration: int) -> None:
        """Initialize with the iteration at which training failed.

        Args:
            message: Human-readable error message
            iteration: Zero-based EM iteration index
        """
        super().__init__(message)
        self.iteration = iteration
