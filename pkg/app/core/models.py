"""Core domain types for merge-event observations and mixture models.

This module defines the numeric data structures shared by every other package:
- FeatureSchema: ordered feature names with the input/output block split
- EventSequence: one merge event as aligned observation frames
- GaussianComponent: one emission distribution with its block decomposition
- HmmModel: initial probabilities, transition matrix and Gaussian emissions
- GmmModel: static mixture weights and Gaussian components

All types are immutable after construction. Arrays are copied on the way in and
marked read-only, so instances can be shared freely between threads.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .exceptions import (
    DimensionMismatchError,
    ModelInvariantError,
    SingularModelError,
)

# Observation frames are plain rows of an EventSequence's value matrix.
ObservationFrame = np.ndarray

FEATURE_NAMES: Tuple[str, ...] = (
    "dv_lead",
    "dx_lag",
    "vx_ego",
    "vy_ego",
    "dv_lag",
    "dx_lead",
)
DEFAULT_OUTPUTS: Tuple[str, ...] = ("vy_ego",)

PROBABILITY_TOLERANCE = 1e-10
SYMMETRY_TOLERANCE = 1e-12


def readonly_array(values, ndim: Optional[int] = None, name: str = "array") -> np.ndarray:
    """Copy values into a read-only float array.

    Args:
        values: Array-like input
        ndim: Required number of dimensions (None skips the check)
        name: Field name used in error messages

    Returns:
        A new float64 array with the write flag cleared
    """
    array = np.array(values, dtype=float, copy=True)
    if ndim is not None and array.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names with the input (I) / output (O) index split.

    Attributes:
        names: Column names of the observation vector, in order
        outputs: Names forming the output block O (default: vy_ego)
    """

    names: Tuple[str, ...]
    outputs: Tuple[str, ...] = DEFAULT_OUTPUTS

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "outputs", tuple(self.outputs))

        if not self.names:
            raise ValueError("Feature schema must name at least one feature")
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"Duplicate feature names in schema: {self.names}")
        unknown = [name for name in self.names if name not in FEATURE_NAMES]
        if unknown:
            raise ValueError(
                f"Unknown feature names {unknown}; expected names from {FEATURE_NAMES}"
            )
        if not self.outputs:
            raise ValueError("Output block must be nonempty")
        missing = [name for name in self.outputs if name not in self.names]
        if missing:
            raise ValueError(f"Output features {missing} are not part of the schema {self.names}")

    @classmethod
    def from_inputs(
        cls, inputs: Iterable[str], outputs: Iterable[str] = DEFAULT_OUTPUTS
    ) -> "FeatureSchema":
        """Build a schema whose columns are the inputs followed by the outputs."""
        inputs = tuple(inputs)
        outputs = tuple(outputs)
        return cls(names=inputs + outputs, outputs=outputs)

    @property
    def D(self) -> int:
        return len(self.names)

    @cached_property
    def output_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, name in enumerate(self.names) if name in self.outputs)

    @cached_property
    def input_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, name in enumerate(self.names) if name not in self.outputs)

    @property
    def input_names(self) -> Tuple[str, ...]:
        return tuple(self.names[i] for i in self.input_indices)

    @property
    def output_names(self) -> Tuple[str, ...]:
        return tuple(self.names[i] for i in self.output_indices)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def describe(self) -> str:
        """Short label such as 'dv_lead,dx_lag,vx_ego -> vy_ego'."""
        return f"{','.join(self.input_names)} -> {','.join(self.output_names)}"


@dataclass(frozen=True, eq=False)
class EventSequence:
    """One merge event: aligned multivariate observation frames.

    Attributes:
        event_id: Identifier of the merge event
        values: T x D matrix, one row (ObservationFrame) per frame
        timestamps: Frame times in milliseconds, strictly increasing
        schema: Feature schema binding the columns of values
    """

    event_id: str
    values: np.ndarray
    timestamps: np.ndarray
    schema: FeatureSchema

    def __post_init__(self):
        values = readonly_array(self.values, ndim=2, name="values")
        timestamps = readonly_array(self.timestamps, ndim=1, name="timestamps")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamps", timestamps)

        if values.shape[1] != self.schema.D:
            raise DimensionMismatchError(
                f"Event {self.event_id}: frames have {values.shape[1]} columns, "
                f"schema has {self.schema.D}",
                expected=self.schema.D,
                actual=values.shape[1],
            )
        if values.shape[0] < 2:
            raise ValueError(f"Event {self.event_id}: at least 2 frames required")
        if timestamps.shape[0] != values.shape[0]:
            raise ValueError(
                f"Event {self.event_id}: {timestamps.shape[0]} timestamps for "
                f"{values.shape[0]} frames"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.argwhere(~np.isfinite(values))[0][0])
            raise ValueError(f"Event {self.event_id}: non-finite value at frame {bad}")
        if np.any(np.diff(timestamps) <= 0):
            raise ValueError(f"Event {self.event_id}: timestamps must be strictly increasing")

    @property
    def T(self) -> int:
        return int(self.values.shape[0])

    @property
    def frames(self) -> Tuple[ObservationFrame, ...]:
        return tuple(self.values)

    @property
    def inputs(self) -> np.ndarray:
        """T x |I| input block."""
        return self.values[:, list(self.schema.input_indices)]

    @property
    def outputs(self) -> np.ndarray:
        """T x |O| output block."""
        return self.values[:, list(self.schema.output_indices)]

    def select(self, schema: FeatureSchema) -> "EventSequence":
        """Return the same event restricted and reordered to another schema.

        Raises:
            KeyError: If the target schema names a feature this event lacks
        """
        if schema == self.schema:
            return self
        try:
            columns = [self.schema.index_of(name) for name in schema.names]
        except ValueError as e:
            raise KeyError(
                f"Event {self.event_id} has features {self.schema.names}, "
                f"cannot select {schema.names}"
            ) from e
        return EventSequence(
            event_id=self.event_id,
            values=self.values[:, columns],
            timestamps=self.timestamps,
            schema=schema,
        )

    def __eq__(self, other):
        if not isinstance(other, EventSequence):
            return NotImplemented
        return (
            self.event_id == other.event_id
            and self.schema == other.schema
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.timestamps, other.timestamps)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    """A multivariate normal emission distribution N(mean, covariance).

    The lower Cholesky factor is computed once at construction; a covariance
    that cannot be factorized is rejected with SingularModelError.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = readonly_array(self.mean, ndim=1, name="mean")
        covariance = readonly_array(self.covariance, ndim=2, name="covariance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", covariance)

        D = mean.shape[0]
        if covariance.shape != (D, D):
            raise DimensionMismatchError(
                f"Covariance shape {covariance.shape} does not match mean length {D}",
                expected=D,
                actual=covariance.shape[0],
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(covariance))):
            raise SingularModelError("Gaussian component has non-finite parameters")

        scale = float(np.max(np.abs(covariance))) if covariance.size else 0.0
        asymmetry = float(np.max(np.abs(covariance - covariance.T))) if covariance.size else 0.0
        if asymmetry > SYMMETRY_TOLERANCE * scale:
            raise ModelInvariantError(
                f"Covariance is not symmetric (max asymmetry {asymmetry:.3e})",
                invariant="component.symmetric",
            )

        try:
            cholesky = linalg.cholesky(covariance, lower=True)
        except linalg.LinAlgError as e:
            raise SingularModelError(
                f"Covariance is not positive definite: {e}"
            ) from e
        cholesky.setflags(write=False)
        object.__setattr__(self, "_cholesky", cholesky)

    @property
    def D(self) -> int:
        return int(self.mean.shape[0])

    @property
    def cholesky(self) -> np.ndarray:
        """Lower triangular factor L with L @ L.T == covariance."""
        return self._cholesky  # type: ignore[attr-defined]

    @cached_property
    def log_det(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.cholesky))))

    def marginal(self, indices: Sequence[int]) -> "GaussianComponent":
        """Return the marginal distribution over a subset of dimensions."""
        idx = list(indices)
        return GaussianComponent(
            mean=self.mean[idx],
            covariance=self.covariance[np.ix_(idx, idx)],
        )

    def __eq__(self, other):
        if not isinstance(other, GaussianComponent):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(
            self.covariance, other.covariance
        )

    __hash__ = None


def _check_probability_vector(vector: np.ndarray, name: str) -> None:
    if np.any(vector < 0.0) or np.any(vector > 1.0 + PROBABILITY_TOLERANCE):
        raise ModelInvariantError(
            f"{name} entries must lie in [0, 1], got {vector.tolist()}",
            invariant=f"{name}.range",
        )
    total = float(np.sum(vector))
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        raise ModelInvariantError(
            f"{name} must sum to 1, got {total!r}",
            invariant=f"{name}.sum",
        )


def _check_components(
    components: Tuple[GaussianComponent, ...], K: int, schema: FeatureSchema
) -> None:
    if len(components) != K:
        raise ModelInvariantError(
            f"Expected {K} components, got {len(components)}",
            invariant="components.count",
        )
    for k, component in enumerate(components):
        if component.D != schema.D:
            raise ModelInvariantError(
                f"Component {k} has dimension {component.D}, schema has {schema.D}",
                invariant="component.dimension",
            )


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Gaussian-emission hidden Markov model theta = {pi, A, mu, Sigma}.

    Rows of the transition matrix are conditional distributions:
    trans[j, k] = p(z_t = k | z_{t-1} = j), so every row sums to one.

    Attributes:
        pi: Length-K initial state probabilities
        trans: K x K row-stochastic transition matrix
        components: K Gaussian emission distributions
        schema: Feature schema of the emission space
    """

    pi: np.ndarray
    trans: np.ndarray
    components: Tuple[GaussianComponent, ...]
    schema: FeatureSchema

    def __post_init__(self):
        pi = readonly_array(self.pi, ndim=1, name="pi")
        trans = readonly_array(self.trans, ndim=2, name="trans")
        components = tuple(self.components)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "trans", trans)
        object.__setattr__(self, "components", components)

        K = pi.shape[0]
        if K < 1:
            raise ModelInvariantError("Model needs at least one state", invariant="K.min")
        _check_probability_vector(pi, "pi")
        if trans.shape != (K, K):
            raise ModelInvariantError(
                f"Transition matrix must be {K}x{K}, got {trans.shape}",
                invariant="trans.shape",
            )
        if np.any(trans < 0.0) or np.any(trans > 1.0 + PROBABILITY_TOLERANCE):
            raise ModelInvariantError(
                "Transition entries must lie in [0, 1]", invariant="trans.range"
            )
        row_sums = trans.sum(axis=1)
        for j, total in enumerate(row_sums):
            if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                raise ModelInvariantError(
                    f"Transition row {j} sums to {total!r}, expected 1",
                    invariant="trans.row_sum",
                )
        _check_components(components, K, self.schema)

    @property
    def K(self) -> int:
        return int(self.pi.shape[0])

    @property
    def D(self) -> int:
        return self.schema.D

    @cached_property
    def input_marginals(self) -> Tuple[GaussianComponent, ...]:
        """Input-block marginals N(mu_k^I, Sigma_k^II), one per component."""
        return tuple(c.marginal(self.schema.input_indices) for c in self.components)

    def permuted(self, order: Sequence[int]) -> "HmmModel":
        """Relabel states so that new state i is old state order[i]."""
        idx = list(order)
        return HmmModel(
            pi=self.pi[idx],
            trans=self.trans[np.ix_(idx, idx)],
            components=tuple(self.components[i] for i in idx),
            schema=self.schema,
        )

    def __eq__(self, other):
        if not isinstance(other, HmmModel):
            return NotImplemented
        return (
            self.schema == other.schema
            and np.array_equal(self.pi, other.pi)
            and np.array_equal(self.trans, other.trans)
            and self.components == other.components
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GmmModel:
    """Static Gaussian mixture: weights omega and components.

    Attributes:
        weights: Length-K mixing proportions
        components: K Gaussian components
        schema: Feature schema of the joint space
    """

    weights: np.ndarray
    components: Tuple[GaussianComponent, ...]
    schema: FeatureSchema
    source: str = field(default="independent")

    def __post_init__(self):
        weights = readonly_array(self.weights, ndim=1, name="weights")
        components = tuple(self.components)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)

        if weights.shape[0] < 1:
            raise ModelInvariantError("Mixture needs at least one component", invariant="K.min")
        _check_probability_vector(weights, "weights")
        _check_components(components, weights.shape[0], self.schema)

    @property
    def K(self) -> int:
        return int(self.weights.shape[0])

    @property
    def D(self) -> int:
        return self.schema.D

    @cached_property
    def input_marginals(self) -> Tuple[GaussianComponent, ...]:
        return tuple(c.marginal(self.schema.input_indices) for c in self.components)

    def __eq__(self, other):
        if not isinstance(other, GmmModel):
            return NotImplemented
        return (
            self.schema == other.schema
            and np.array_equal(self.weights, other.weights)
            and self.components == other.components
        )

    __hash__ = None
