"""Core model types, Gaussian primitives and model documents."""

from .exceptions import (
    DimensionMismatchError,
    ModelError,
    ModelFormatError,
    ModelInvariantError,
    NumericalError,
    SingularBlockError,
    SingularModelError,
)
from .gaussian import (
    ConditionalRegressor,
    condition_gaussian,
    conditional_regressor,
    gaussian_logpdf,
    gaussian_logpdf_frames,
    regularize_covariance,
)
from .models import (
    DEFAULT_OUTPUTS,
    FEATURE_NAMES,
    EventSequence,
    FeatureSchema,
    GaussianComponent,
    GmmModel,
    HmmModel,
    ObservationFrame,
)
from .serialization import deserialize_model, load_model, save_model, serialize_model

__all__ = [
    # Domain types
    "FeatureSchema",
    "EventSequence",
    "ObservationFrame",
    "GaussianComponent",
    "HmmModel",
    "GmmModel",
    "FEATURE_NAMES",
    "DEFAULT_OUTPUTS",
    # Gaussian primitives
    "gaussian_logpdf",
    "gaussian_logpdf_frames",
    "condition_gaussian",
    "conditional_regressor",
    "ConditionalRegressor",
    "regularize_covariance",
    # Model documents
    "serialize_model",
    "deserialize_model",
    "save_model",
    "load_model",
    # Exceptions
    "ModelError",
    "NumericalError",
    "DimensionMismatchError",
    "SingularModelError",
    "SingularBlockError",
    "ModelInvariantError",
    "ModelFormatError",
]
