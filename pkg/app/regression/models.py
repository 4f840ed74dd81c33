"""Result types of Gaussian mixture regression."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from app.core.models import readonly_array

ROW_SUM_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class BeliefTrajectory:
    """Activation weights h_k of every frame: the model's internal state over time.

    Attributes:
        h: T x K matrix, each row a probability vector
    """

    h: np.ndarray

    def __post_init__(self):
        h = readonly_array(self.h, ndim=2, name="h")
        if np.any(h < 0.0) or np.any(np.abs(h.sum(axis=1) - 1.0) > ROW_SUM_TOLERANCE):
            raise ValueError("Belief rows must be probability vectors")
        object.__setattr__(self, "h", h)

    @property
    def T(self) -> int:
        return int(self.h.shape[0])

    @property
    def K(self) -> int:
        return int(self.h.shape[1])

    @property
    def dominant_state(self) -> np.ndarray:
        """Length-T argmax of each belief row (ties go to the lower index)."""
        return np.argmax(self.h, axis=1)

    @property
    def switch_count(self) -> int:
        """Number of frames at which the dominant state changes."""
        return int(np.count_nonzero(np.diff(self.dominant_state)))


@dataclass(frozen=True, eq=False)
class PredictiveDistribution:
    """Per-frame Gaussian mixture over the output block.

    p(x_t^O | x_1:t^I) = sum_k h_k(t) N(x_t^O | means[t, k], covariances[k])

    Attributes:
        weights: T x K mixture weights (the belief rows)
        means: T x K x |O| component conditional means
        covariances: K x |O| x |O| component conditional covariances
        output_names: Names of the output features
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    output_names: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", readonly_array(self.weights, ndim=2, name="weights"))
        object.__setattr__(self, "means", readonly_array(self.means, ndim=3, name="means"))
        object.__setattr__(
            self, "covariances", readonly_array(self.covariances, ndim=3, name="covariances")
        )
        object.__setattr__(self, "output_names", tuple(self.output_names))
        T, K = self.weights.shape
        if self.means.shape[:2] != (T, K) or self.covariances.shape[0] != K:
            raise ValueError(
                f"Inconsistent mixture shapes: weights {self.weights.shape}, "
                f"means {self.means.shape}, covariances {self.covariances.shape}"
            )

    @property
    def T(self) -> int:
        return int(self.weights.shape[0])

    @property
    def point_estimate(self) -> np.ndarray:
        """T x |O| expectation sum_k h_k mu_k^O."""
        return np.einsum("tk,tko->to", self.weights, self.means)

    @property
    def total_covariance(self) -> np.ndarray:
        """T x |O| x |O| covariance of the mixture (law of total variance)."""
        point = self.point_estimate
        within = np.einsum("tk,kab->tab", self.weights, self.covariances)
        second = np.einsum("tk,tka,tkb->tab", self.weights, self.means, self.means)
        return within + second - np.einsum("ta,tb->tab", point, point)
