"""Merge-event feature extraction from validated track records.

Observation features of one frame (d = sign of the ego's mean vx, so gaps are
measured along the direction of travel):

    dv_lead = vx_lead - vx_ego
    dx_lag  = d * (x_ego - x_lag) - (length_ego + length_lag) / 2
    vx_ego, vy_ego copied as recorded
    dv_lag  = vx_lag - vx_ego
    dx_lead = d * (x_lead - x_ego) - (length_lead + length_ego) / 2

Gaps are bumper to bumper: positive when the vehicles are apart, negative when
they overlap longitudinally. Features use differences and velocities only, so
they do not depend on the position of the road in the recording's frame.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.models import FEATURE_NAMES, EventSequence, FeatureSchema
from app.logging import get_logger
from app.logging.context import map_in_context

from .exceptions import ExtractionError
from .models import FRAME_RESOLUTION_MS, MergeEventLabel, TrackRecord

logger = get_logger(__name__, component="data")

TrackIndex = Dict[int, Dict[int, TrackRecord]]

FULL_SCHEMA = FeatureSchema(names=FEATURE_NAMES)


def index_tracks(tracks: Sequence[TrackRecord]) -> TrackIndex:
    """Group records by track id, then by timestamp."""
    index: TrackIndex = {}
    for record in tracks:
        index.setdefault(record.track_id, {})[record.timestamp_ms] = record
    return index


def _vehicle_frames(
    index: TrackIndex, role: str, track_id: int, grid: np.ndarray, gaps: List[Tuple[str, int]]
) -> List[Optional[TrackRecord]]:
    frames = index.get(track_id, {})
    records = []
    for timestamp in grid:
        record = frames.get(int(timestamp))
        if record is None:
            gaps.append((role, int(timestamp)))
        records.append(record)
    return records


def _columns(records: Sequence[TrackRecord]) -> Dict[str, np.ndarray]:
    return {
        "x": np.array([r.x for r in records]),
        "vx": np.array([r.vx for r in records]),
        "vy": np.array([r.vy for r in records]),
        "length": np.array([r.length for r in records]),
    }


def extract_event(
    tracks, label: MergeEventLabel, schema: FeatureSchema = FULL_SCHEMA
) -> EventSequence:
    """Build the observation sequence of one merge event over [t_s, t_e].

    Args:
        tracks: Track records, or an index built by index_tracks
        label: Event identities and time span
        schema: Features to keep (default: all six)

    Raises:
        ExtractionError: If any vehicle is missing at any frame of the span;
            the error lists every (role, timestamp) gap
    """
    index = tracks if isinstance(tracks, dict) else index_tracks(tracks)
    grid = np.arange(label.t_s, label.t_e + 1, FRAME_RESOLUTION_MS)

    gaps: List[Tuple[str, int]] = []
    ego = _vehicle_frames(index, "ego", label.ego_id, grid, gaps)
    lead = _vehicle_frames(index, "lead", label.lead_id, grid, gaps)
    lag = _vehicle_frames(index, "lag", label.lag_id, grid, gaps)
    if gaps:
        listed = ", ".join(f"{role}@{t}" for role, t in gaps[:10])
        more = f" and {len(gaps) - 10} more" if len(gaps) > 10 else ""
        raise ExtractionError(
            f"Event {label.event_id}: vehicles missing at frames {listed}{more}", gaps=gaps
        )

    e, ld, lg = _columns(ego), _columns(lead), _columns(lag)
    direction = 1.0 if np.mean(e["vx"]) >= 0.0 else -1.0
    features = {
        "dv_lead": ld["vx"] - e["vx"],
        "dx_lag": direction * (e["x"] - lg["x"]) - 0.5 * (e["length"] + lg["length"]),
        "vx_ego": e["vx"],
        "vy_ego": e["vy"],
        "dv_lag": lg["vx"] - e["vx"],
        "dx_lead": direction * (ld["x"] - e["x"]) - 0.5 * (ld["length"] + e["length"]),
    }
    return EventSequence(
        event_id=label.event_id,
        values=np.column_stack([features[name] for name in schema.names]),
        timestamps=grid.astype(float),
        schema=schema,
    )


def extract_events(
    tracks: Sequence[TrackRecord],
    labels: Sequence[MergeEventLabel],
    schema: FeatureSchema = FULL_SCHEMA,
    workers: int = 1,
) -> Tuple[List[EventSequence], Dict[str, str]]:
    """Extract every labelled event, skipping events with vehicle dropouts.

    Returns:
        Tuple of (events in label order, error message per skipped event id)
    """
    index = index_tracks(tracks)

    def extract(label: MergeEventLabel):
        try:
            return extract_event(index, label, schema), None
        except (ExtractionError, ValueError) as e:
            return None, str(e)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(map_in_context(executor, extract, labels))
    else:
        results = [extract(label) for label in labels]

    events: List[EventSequence] = []
    skipped: Dict[str, str] = {}
    for label, (event, error) in zip(labels, results):
        if event is None:
            skipped[label.event_id] = error
            logger.warning(
                "Skipping merge event",
                extra={"event": "extraction.event.skipped", "event_id": label.event_id, "error": error},
            )
        else:
            events.append(event)
    logger.info(
        "Extracted merge events",
        extra={"event": "extraction.events.completed", "n_events": len(events), "n_skipped": len(skipped)},
    )
    return events, skipped
