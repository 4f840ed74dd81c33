"""Exceptions raised by probabilistic inference."""

from app.core.exceptions import NumericalError


class InferenceError(Exception):
    """Base exception for all inference errors."""

    pass


class ImpossibleObservationError(InferenceError, NumericalError):
    """No state can explain the observation at frame t.

    Raised when every component's density underflows even in log space, or when
    the reachable states at frame t all have zero emission probability. The
    recursion fails loudly instead of clamping, since a clamped frame would
    silently corrupt the EM statistics.
    """

    def __init__(self, message: str, t: int) -> None:
        """Initialize with the offending frame index.

        Args:
            message: Human-readable error message
            t: Zero-based frame index
        """
        super().__init__(message)
        self.t = t


class StateSpaceTooLargeError(InferenceError):
    """The enumeration oracle was asked to sum over too many state paths."""

    def __init__(self, message: str, n_paths: int) -> None:
        super().__init__(message)
        self.n_paths = n_paths
