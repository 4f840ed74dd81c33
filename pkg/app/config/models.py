"""Configuration schema models using Pydantic."""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.models import FEATURE_NAMES
from app.data.alignment import DEFAULT_ALIGN_LENGTH
from app.data.synthetic import SynthSpec
from app.evaluation.models import Approach, GmmSource
from app.evaluation.protocols import DEFAULT_FEATURE_SETS
from app.learning.models import InitMethod, TrainingConfig


class LogLevel(str, Enum):
    """Logging levels."""

    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class LogFormat(str, Enum):
    """Log output formats."""

    JSON = "json"
    KEY_VALUE = "key-value"


class DataConfig(BaseModel):
    """Corpus preparation settings."""

    align_length: int = Field(
        DEFAULT_ALIGN_LENGTH, ge=2, description="Frames per event after time alignment"
    )
    train_fraction: float = Field(0.8, gt=0.0, lt=1.0, description="Share of events used for training")
    split_seed: int = Field(0, description="Seed of the train/test split")


class SelectionConfig(BaseModel):
    """Range of K scanned by select-k."""

    k_min: int = Field(1, ge=1)
    k_max: int = Field(8, ge=1)

    @model_validator(mode="after")
    def validate_range(self):
        if self.k_max < self.k_min:
            raise ValueError(f"k_max ({self.k_max}) must not be below k_min ({self.k_min})")
        return self

    @property
    def k_range(self) -> List[int]:
        return list(range(self.k_min, self.k_max + 1))


class EvaluationSettings(BaseModel):
    """Protocol settings of the evaluate command."""

    feature_sets: List[List[str]] = Field(
        default_factory=lambda: [list(s) for s in DEFAULT_FEATURE_SETS],
        min_length=1,
        description="Input sets of the variable sweep",
    )
    approaches: List[Approach] = Field(default_factory=lambda: ["hmm_gmr", "gmm_gmr"], min_length=1)
    inits: List[InitMethod] = Field(
        default_factory=lambda: [InitMethod.K_BINS.value, InitMethod.K_MEANS.value], min_length=1
    )
    gmm_source: GmmSource = Field("independent", description="How GMM-GMR baselines are trained")
    workers: int = Field(1, ge=1, description="Configurations evaluated in parallel")

    model_config = {"use_enum_values": True}

    @field_validator("feature_sets")
    @classmethod
    def validate_feature_sets(cls, v: List[List[str]]) -> List[List[str]]:
        """Every set must be non-empty, duplicate-free and use known feature names."""
        for idx, names in enumerate(v):
            if not names:
                raise ValueError(f"Feature set {idx} is empty")
            if len(set(names)) != len(names):
                raise ValueError(f"Feature set {idx} repeats a feature: {names}")
            unknown = sorted(set(names) - set(FEATURE_NAMES))
            if unknown:
                raise ValueError(
                    f"Feature set {idx} uses unknown features {unknown}; "
                    f"known features are {list(FEATURE_NAMES)}"
                )
        return v


class LoggingConfig(BaseModel):
    """Logging configuration."""

    level: LogLevel = Field(LogLevel.INFO, description="Log level")
    format: LogFormat = Field(
        LogFormat.KEY_VALUE, description="Log output format (json or key-value)"
    )

    model_config = {"use_enum_values": True}


class AppConfig(BaseModel):
    """Root configuration object. Every section is optional."""

    training: TrainingConfig = Field(default_factory=TrainingConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    selection: SelectionConfig = Field(default_factory=SelectionConfig)
    evaluation: EvaluationSettings = Field(default_factory=EvaluationSettings)
    synth: SynthSpec = Field(default_factory=SynthSpec)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    model_config = {"extra": "forbid"}

    def fingerprint_payload(self, command: Optional[str] = None) -> dict:
        """JSON-ready view of the settings that shape a command's outputs."""
        payload = self.model_dump(mode="json", exclude={"logging"})
        if command is not None:
            payload["command"] = command
        return payload
