"""Exceptions raised by the core model types and numerical primitives.

All exceptions inherit from ModelError so callers can catch every core failure
with a single except clause. Failures caused by floating point limits also
inherit from NumericalError, which the CLI maps to its numeric-failure exit code.
"""

from typing import List, Optional


class NumericalError(Exception):
    """Mixin base for failures caused by floating point limits.

    Shared across packages (core, inference, learning) so that a single except
    clause can separate numeric failures from data and usage errors.
    """

    pass


class ModelError(Exception):
    """Base exception for all core model errors."""

    pass


class DimensionMismatchError(ModelError):
    """An observation or parameter block does not match the expected dimension."""

    def __init__(self, message: str, expected: int, actual: int) -> None:
        """Initialize with the expected and received dimensions.

        Args:
            message: Human-readable error message
            expected: Dimension required by the model or schema
            actual: Dimension that was supplied
        """
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class SingularModelError(ModelError, NumericalError):
    """A covariance matrix is not positive definite, even after regularization."""

    pass


class SingularBlockError(ModelError, NumericalError):
    """The input block of a covariance is too ill-conditioned to invert."""

    def __init__(self, message: str, condition_number: float) -> None:
        super().__init__(message)
        self.condition_number = condition_number


class ModelInvariantError(ModelError):
    """A model violates one of its structural invariants.

    Examples:
    - initial probabilities that do not sum to one
    - a transition row that does not sum to one
    - component dimensions that disagree with the feature schema
    """

    def __init__(self, message: str, invariant: str) -> None:
        """Initialize with the name of the failing invariant.

        Args:
            message: Human-readable error message
            invariant: Short identifier of the violated invariant
                (e.g. "trans.row_sum", "pi.sum", "component.dimension")
        """
        super().__init__(message)
        self.invariant = invariant


class ModelFormatError(ModelError):
    """A serialized model document could not be read."""

    def __init__(self, message: str, errors: Optional[List[str]] = None) -> None:
        self.message = message
        self.errors = errors or []
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        parts = [self.message]
        for i, error in enumerate(self.errors, 1):
            parts.append(f"  {i}. {error}")
        return "\n".join(parts)
