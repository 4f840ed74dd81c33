"""Resampling of events onto a common number of frames."""

from typing import List, Sequence

import numpy as np

from app.core.models import EventSequence

DEFAULT_ALIGN_LENGTH = 100


def align_event(event: EventSequence, target_len: int = DEFAULT_ALIGN_LENGTH) -> EventSequence:
    """Resample one event to target_len frames on a uniform grid over its time span.

    Each feature is linearly interpolated; the first and last frames are kept
    exactly.

    Raises:
        ValueError: If target_len < 2
    """
    if target_len < 2:
        raise ValueError(f"target_len must be at least 2, got {target_len}")
    source = event.timestamps
    grid = np.linspace(source[0], source[-1], target_len)
    values = np.column_stack(
        [np.interp(grid, source, event.values[:, j]) for j in range(event.schema.D)]
    )
    values[0] = event.values[0]
    values[-1] = event.values[-1]
    return EventSequence(
        event_id=event.event_id, values=values, timestamps=grid, schema=event.schema
    )


def align_events(
    events: Sequence[EventSequence], target_len: int = DEFAULT_ALIGN_LENGTH
) -> List[EventSequence]:
    """Resample every event to the same length."""
    return [align_event(event, target_len) for event in events]
