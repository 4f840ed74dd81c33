"""Prediction error metrics.

For one event with reference outputs x_1..x_T and predictions p_1..p_T:

    mse     = (1/T) sum_t (p_t - x_t)^2
    mse_ref = (1/T) sum_t (mean(x) - x_t)^2
    skill   = (mse - mse_ref) / (0 - mse_ref)
    rmse    = sqrt(mse)

Multi-dimensional outputs average the squared error over every output entry.
"""

import math

import numpy as np

from .exceptions import UndefinedSkillScoreError
from .models import EventScore


def _as_block(values, name: str) -> np.ndarray:
    block = np.asarray(values, dtype=float)
    if block.ndim == 1:
        block = block[:, None]
    if block.ndim != 2 or block.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty length-T sequence, got shape {block.shape}")
    if not np.all(np.isfinite(block)):
        raise ValueError(f"{name} contains non-finite values")
    return block


def score_event(predicted, reference, event_id: str = "") -> EventScore:
    """Score one predicted output sequence against its reference.

    Raises:
        ValueError: If the sequences are empty, non-finite or differ in shape
        UndefinedSkillScoreError: If the reference is constant (mse_ref = 0)
    """
    predicted = _as_block(predicted, "predicted")
    reference = _as_block(reference, "reference")
    if predicted.shape != reference.shape:
        raise ValueError(
            f"predicted shape {predicted.shape} differs from reference shape {reference.shape}"
        )

    # A constant column can still give mse_ref ~ 1e-30 once its mean rounds off
    scale = np.maximum(np.abs(reference).max(axis=0), 1.0)
    if np.all(np.ptp(reference, axis=0) <= np.finfo(float).eps * scale):
        raise UndefinedSkillScoreError(
            f"Event {event_id or '?'} has a constant reference output; skill score undefined",
            event_id=event_id,
        )

    mse = float(np.mean((predicted - reference) ** 2))
    mse_ref = float(np.mean((reference.mean(axis=0) - reference) ** 2))
    return EventScore(
        event_id=event_id,
        mse=mse,
        mse_ref=mse_ref,
        skill=(mse_ref - mse) / mse_ref,
        rmse=math.sqrt(mse),
    )
