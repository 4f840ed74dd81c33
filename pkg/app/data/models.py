"""Data records and corpus containers.

- TrackRecord: one row of a trajectory recording (one vehicle at one frame)
- MergeEventLabel: ego/lead/lag identities and the merge time span of an event
- SplitManifest: seeded train/test partition of event ids
- Corpus: event sequences sharing a schema, plus an optional split
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.models import EventSequence, FeatureSchema

FRAME_RESOLUTION_MS = 100

TRACK_COLUMNS: Tuple[str, ...] = (
    "track_id",
    "frame_id",
    "timestamp_ms",
    "agent_type",
    "x",
    "y",
    "vx",
    "vy",
    "psi_rad",
    "length",
    "width",
)
LABEL_COLUMNS: Tuple[str, ...] = ("event_id", "ego_id", "lead_id", "lag_id", "t_s", "t_e")


class TrackRecord(BaseModel):
    """State of one vehicle at one frame.

    Positions are in metres, velocities in m/s, yaw in radians. Signs are kept
    as recorded (vehicles driving toward -x have negative vx).
    """

    track_id: int = Field(..., description="Vehicle track identifier")
    frame_id: int = Field(..., description="Frame index within the recording")
    timestamp_ms: int = Field(..., ge=0, description="Frame time in milliseconds")
    agent_type: Literal["car", "truck"] = Field(..., description="Vehicle class")
    x: float
    y: float
    vx: float
    vy: float
    psi_rad: float
    length: float = Field(..., gt=0)
    width: float = Field(..., gt=0)

    model_config = {"frozen": True}

    @field_validator("timestamp_ms")
    @classmethod
    def check_resolution(cls, v: int) -> int:
        """Timestamps lie on the 100 ms frame grid."""
        if v % FRAME_RESOLUTION_MS != 0:
            raise ValueError(f"timestamp_ms must be a multiple of {FRAME_RESOLUTION_MS}, got {v}")
        return v

    @field_validator("x", "y", "vx", "vy", "psi_rad", "length", "width")
    @classmethod
    def check_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("value must be finite")
        return v

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


class MergeEventLabel(BaseModel):
    """Identities and time span of one merge event.

    An optional middle moment t_m may appear in label files; it is parsed and
    not used.
    """

    event_id: str = Field(..., min_length=1)
    ego_id: int
    lead_id: int
    lag_id: int
    t_s: int = Field(..., ge=0, description="Merge start moment in milliseconds")
    t_e: int = Field(..., ge=0, description="Merge end moment in milliseconds")
    t_m: Optional[int] = Field(None, description="Middle moment (ignored)")

    model_config = {"frozen": True}

    @field_validator("event_id")
    @classmethod
    def strip_event_id(cls, v: str) -> str:
        stripped = v.strip()
        if not stripped:
            raise ValueError("event_id cannot be empty or whitespace-only")
        return stripped

    @model_validator(mode="after")
    def check_span(self):
        if self.t_s >= self.t_e:
            raise ValueError(f"t_s ({self.t_s}) must be before t_e ({self.t_e})")
        if len({self.ego_id, self.lead_id, self.lag_id}) != 3:
            raise ValueError("ego, lead and lag must be three different tracks")
        return self


class SplitManifest(BaseModel):
    """Seeded partition of event ids into train and test sets."""

    train_ids: List[str]
    test_ids: List[str]
    fraction: float = Field(0.8, gt=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def check_partition(self):
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValueError(f"Events assigned to both splits: {sorted(overlap)}")
        if len(set(self.train_ids)) != len(self.train_ids) or len(set(self.test_ids)) != len(
            self.test_ids
        ):
            raise ValueError("Split lists contain duplicate event ids")
        return self


@dataclass(frozen=True)
class Corpus:
    """Event sequences sharing one schema, with an optional train/test split.

    Attributes:
        events: Sequences in corpus order
        schema: Feature schema of every event
        split: Partition of the event ids (None until split_corpus runs)
    """

    events: Tuple[EventSequence, ...]
    schema: FeatureSchema
    split: Optional[SplitManifest] = None
    _index: Dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        index = {}
        for i, event in enumerate(self.events):
            if event.event_id in index:
                raise ValueError(f"Duplicate event id {event.event_id}")
            if event.schema != self.schema:
                raise ValueError(
                    f"Event {event.event_id} has schema {event.schema.names}, "
                    f"corpus schema is {self.schema.names}"
                )
            index[event.event_id] = i
        object.__setattr__(self, "_index", index)

        if self.split is not None:
            assigned = set(self.split.train_ids) | set(self.split.test_ids)
            if assigned != set(index):
                raise ValueError("Split manifest does not partition the corpus event ids")

    def __len__(self) -> int:
        return len(self.events)

    @property
    def event_ids(self) -> List[str]:
        return [event.event_id for event in self.events]

    def get(self, event_id: str) -> EventSequence:
        """Return one event by id.

        Raises:
            KeyError: If the corpus has no such event
        """
        return self.events[self._index[event_id]]

    def _events_for(self, ids: Sequence[str]) -> List[EventSequence]:
        if self.split is None:
            raise ValueError("Corpus has no split; run split_corpus first")
        return [self.get(event_id) for event_id in ids]

    @property
    def train_events(self) -> List[EventSequence]:
        return self._events_for(self.split.train_ids if self.split else [])

    @property
    def test_events(self) -> List[EventSequence]:
        return self._events_for(self.split.test_ids if self.split else [])

    def with_split(self, split: SplitManifest) -> "Corpus":
        return Corpus(events=self.events, schema=self.schema, split=split)

    def select(self, schema: FeatureSchema) -> "Corpus":
        """Restrict every event to another schema, keeping the split.

        Raises:
            KeyError: If the corpus lacks a feature named by the schema
        """
        return Corpus(
            events=tuple(event.select(schema) for event in self.events),
            schema=schema,
            split=self.split,
        )
