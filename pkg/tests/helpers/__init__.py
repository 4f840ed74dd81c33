"""Test helper utilities for merge-states tests."""

from .random_models import (
    random_covariance,
    random_event,
    random_hmm,
    random_schema,
    random_stochastic,
    three_phase_spec,
)

__all__ = [
    "random_covariance",
    "random_event",
    "random_hmm",
    "random_schema",
    "random_stochastic",
    "three_phase_spec",
]
