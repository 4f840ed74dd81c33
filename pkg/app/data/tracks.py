"""Readers for trajectory recordings and merge-event label files.

Both files are delimiter-separated text with a header row. Every row is
validated by its pydantic record; rejected rows are collected with their line
numbers and reported together in one TrackFormatError.
"""

from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Type, TypeVar

import pandas as pd
from pydantic import BaseModel, ValidationError

from app.logging import get_logger

from .exceptions import TrackFormatError
from .models import LABEL_COLUMNS, TRACK_COLUMNS, MergeEventLabel, TrackRecord

logger = get_logger(__name__, component="data")

MAX_PLAUSIBLE_SPEED = 60.0

RecordT = TypeVar("RecordT", bound=BaseModel)


def _read_table(path: Path, required: Sequence[str], delimiter: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError as e:
        raise TrackFormatError(
            f"{path}: file is empty, expected a header with columns {list(required)}"
        ) from e
    except pd.errors.ParserError as e:
        raise TrackFormatError(f"{path}: cannot parse file", errors=[str(e)]) from e

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise TrackFormatError(f"{path}: missing columns {missing}")
    return frame


def _validate_rows(
    path: Path, frame: pd.DataFrame, record_type: Type[RecordT]
) -> List[Tuple[int, RecordT]]:
    records: List[Tuple[int, RecordT]] = []
    errors: List[str] = []
    for offset, row in enumerate(frame.to_dict("records")):
        line = offset + 2
        try:
            present = {key: value for key, value in row.items() if value != ""}
            records.append((line, record_type.model_validate(present)))
        except ValidationError as e:
            for error in e.errors():
                field_path = ".".join(str(loc) for loc in error["loc"]) or "row"
                errors.append(f"line {line}: {field_path}: {error['msg']}")
    if errors:
        raise TrackFormatError(f"{path}: {len(errors)} invalid value(s)", errors=errors)
    return records


def load_tracks(path: Path, delimiter: str = ",") -> List[TrackRecord]:
    """Read and validate a trajectory recording.

    Records are returned sorted by (track_id, timestamp_ms), so the result
    does not depend on row order in the file. Frames that go backwards within
    a track and speeds above 60 m/s are logged as warnings.

    Args:
        path: Track file with columns track_id, frame_id, timestamp_ms,
            agent_type, x, y, vx, vy, psi_rad, length, width
        delimiter: Column separator

    Returns:
        Validated records

    Raises:
        FileNotFoundError: If the file does not exist
        TrackFormatError: On missing columns, invalid values or duplicate frames
    """
    path = Path(path)
    frame = _read_table(path, TRACK_COLUMNS, delimiter)
    rows = _validate_rows(path, frame, TrackRecord)

    last_seen: Dict[int, int] = {}
    seen_frames: Dict[Tuple[int, int], int] = {}
    errors: List[str] = []
    non_monotone = set()
    for line, record in rows:
        key = (record.track_id, record.timestamp_ms)
        if key in seen_frames:
            errors.append(
                f"line {line}: track {record.track_id} repeats timestamp {record.timestamp_ms} "
                f"(first on line {seen_frames[key]})"
            )
        seen_frames.setdefault(key, line)

        previous = last_seen.get(record.track_id)
        if previous is not None and record.frame_id <= previous:
            non_monotone.add(record.track_id)
        last_seen[record.track_id] = record.frame_id

        if record.speed > MAX_PLAUSIBLE_SPEED:
            logger.warning(
                "Implausible vehicle speed",
                extra={
                    "event": "tracks.row.implausible",
                    "file": str(path),
                    "line": line,
                    "track_id": record.track_id,
                    "speed": record.speed,
                },
            )

    if errors:
        raise TrackFormatError(f"{path}: duplicate frames", errors=errors)

    for track_id in sorted(non_monotone):
        logger.warning(
            "Frames of track are not in increasing order, sorting by time",
            extra={"event": "tracks.frames.non_monotone", "file": str(path), "track_id": track_id},
        )

    records = sorted((record for _, record in rows), key=lambda r: (r.track_id, r.timestamp_ms))
    logger.info(
        "Loaded tracks",
        extra={
            "event": "tracks.file.loaded",
            "file": str(path),
            "n_records": len(records),
            "n_tracks": len(last_seen),
        },
    )
    return records


def load_labels(path: Path, delimiter: str = ",") -> List[MergeEventLabel]:
    """Read merge-event labels (event_id, ego_id, lead_id, lag_id, t_s, t_e).

    An optional t_m column is accepted and ignored.

    Raises:
        FileNotFoundError: If the file does not exist
        TrackFormatError: On missing columns, invalid rows or duplicate event ids
    """
    path = Path(path)
    frame = _read_table(path, LABEL_COLUMNS, delimiter)
    rows = _validate_rows(path, frame, MergeEventLabel)

    first_line: Dict[str, int] = {}
    errors = []
    for line, label in rows:
        if label.event_id in first_line:
            errors.append(
                f"line {line}: duplicate event_id {label.event_id} "
                f"(first on line {first_line[label.event_id]})"
            )
        first_line.setdefault(label.event_id, line)
    if errors:
        raise TrackFormatError(f"{path}: duplicate labels", errors=errors)

    return [label for _, label in rows]
