"""Exact inference for a fixed HmmModel: forward/backward, posteriors, oracle."""

from .exceptions import ImpossibleObservationError, InferenceError, StateSpaceTooLargeError
from .forward_backward import (
    as_observations,
    backward,
    backward_from_log_densities,
    batch_posteriors_from_log_densities,
    emission_log_densities,
    forward,
    forward_from_log_densities,
    posteriors,
    posteriors_from_log_densities,
)
from .models import BatchPosteriors, ForwardBackwardResult, ForwardPass, OracleResult
from .oracle import enumerate_oracle

__all__ = [
    "forward",
    "backward",
    "posteriors",
    "enumerate_oracle",
    "emission_log_densities",
    "as_observations",
    "forward_from_log_densities",
    "backward_from_log_densities",
    "posteriors_from_log_densities",
    "batch_posteriors_from_log_densities",
    "BatchPosteriors",
    "ForwardPass",
    "ForwardBackwardResult",
    "OracleResult",
    "InferenceError",
    "ImpossibleObservationError",
    "StateSpaceTooLargeError",
]
