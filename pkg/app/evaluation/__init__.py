"""Prediction metrics and the variable-sweep / approach-comparison protocols."""

from .exceptions import EvaluationError, UndefinedSkillScoreError
from .metrics import score_event
from .models import EvaluationReport, EventScore, ExperimentDescriptor, StateRange
from .protocols import (
    DEFAULT_FEATURE_SETS,
    DEFAULT_INPUTS,
    EvaluationConfig,
    evaluate_model,
    run_approach_comparison,
    run_configuration,
    run_configurations,
    run_variable_sweep,
    state_ranges,
    train_model,
)

__all__ = [
    "score_event",
    "evaluate_model",
    "train_model",
    "run_configuration",
    "run_configurations",
    "run_variable_sweep",
    "run_approach_comparison",
    "state_ranges",
    "DEFAULT_FEATURE_SETS",
    "DEFAULT_INPUTS",
    "EvaluationConfig",
    "EvaluationReport",
    "EventScore",
    "ExperimentDescriptor",
    "StateRange",
    "EvaluationError",
    "UndefinedSkillScoreError",
]
