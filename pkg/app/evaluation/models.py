"""Configuration descriptors and result records of evaluation runs."""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator

from app.core.models import DEFAULT_OUTPUTS, FeatureSchema
from app.learning.models import InitMethod

Approach = Literal["hmm_gmr", "gmm_gmr"]
GmmSource = Literal["independent", "from_hmm"]


class ExperimentDescriptor(BaseModel):
    """Identity of one evaluated configuration: features, approach, initialization."""

    inputs: Tuple[str, ...] = Field(..., min_length=1, description="Input feature names")
    outputs: Tuple[str, ...] = Field(DEFAULT_OUTPUTS, min_length=1)
    approach: Approach = "hmm_gmr"
    init_method: InitMethod = InitMethod.K_BINS.value
    k: int = Field(3, ge=1)
    gmm_source: Optional[GmmSource] = None

    model_config = {"frozen": True, "use_enum_values": True}

    @field_validator("inputs", "outputs", mode="before")
    @classmethod
    def as_tuple(cls, v):
        return tuple(v)

    def schema(self) -> FeatureSchema:
        return FeatureSchema.from_inputs(self.inputs, self.outputs)

    @property
    def features_label(self) -> str:
        return ",".join(self.inputs)

    @property
    def label(self) -> str:
        """e.g. 'hmm_gmr(k_bins)' or 'gmm_gmr(k_means, from_hmm)'."""
        extra = f", {self.gmm_source}" if self.approach == "gmm_gmr" and self.gmm_source else ""
        return f"{self.approach}({self.init_method}{extra})"


@dataclass(frozen=True)
class EventScore:
    """Scores of one test event.

    Attributes:
        event_id: Scored event
        mse: Mean squared prediction error
        mse_ref: Mean squared error of the event's own mean output
        skill: (mse_ref - mse) / mse_ref; 1 is perfect, 0 matches the mean
        rmse: sqrt(mse)
    """

    event_id: str
    mse: float
    mse_ref: float
    skill: float
    rmse: float


@dataclass
class EvaluationReport:
    """Per-event and aggregate scores of one configuration on the test events.

    A configuration that could not be trained carries its error and no scores.
    """

    descriptor: ExperimentDescriptor
    per_event: List[EventScore] = field(default_factory=list)
    excluded: Dict[str, str] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def mean_skill(self) -> float:
        if not self.per_event:
            return math.nan
        return float(np.mean([s.skill for s in self.per_event]))

    @property
    def mean_rmse(self) -> float:
        if not self.per_event:
            return math.nan
        return float(np.mean([s.rmse for s in self.per_event]))

    def sort_key(self) -> float:
        """Mean skill, with failed or empty reports ranked last."""
        value = self.mean_skill
        return -math.inf if math.isnan(value) else value


@dataclass(frozen=True)
class StateRange:
    """Range of every input feature over the frames where one state dominates.

    Attributes:
        state: Zero-based state index
        n_frames: Number of frames with this dominant state
        minimum: Feature name -> minimum value (empty when unvisited)
        maximum: Feature name -> maximum value (empty when unvisited)
    """

    state: int
    n_frames: int
    minimum: Dict[str, float]
    maximum: Dict[str, float]

    @property
    def visited(self) -> bool:
        return self.n_frames > 0
