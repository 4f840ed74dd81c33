"""Result types of forward/backward inference."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class ForwardPass(NamedTuple):
    """Output of the scaled forward recursion.

    Attributes:
        scaled_alpha: T x K, each row normalized to sum to one
        log_scales: Length-T log normalizers; their sum is log p(x_1:T)
        log_likelihood: log p(x_1:T | theta)
    """

    scaled_alpha: np.ndarray
    log_scales: np.ndarray
    log_likelihood: float


@dataclass(frozen=True, eq=False)
class ForwardBackwardResult:
    """Posteriors of one sequence under a fixed model.

    Attributes:
        log_likelihood: log p(x_1:T | theta)
        gamma: T x K state occupancy posteriors gamma_t(k)
        xi: (T-1) x K x K transition posteriors xi_t(j, k)
        scaled_alpha: T x K normalized forward variables
        scaled_beta: T x K backward variables scaled by the forward normalizers
        log_scales: Length-T log normalizers of the forward pass
    """

    log_likelihood: float
    gamma: np.ndarray
    xi: np.ndarray
    scaled_alpha: np.ndarray
    scaled_beta: np.ndarray
    log_scales: np.ndarray

    @property
    def scales(self) -> np.ndarray:
        """Linear forward normalizers (may underflow for extreme densities)."""
        return np.exp(self.log_scales)

    @property
    def T(self) -> int:
        return int(self.gamma.shape[0])


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Exact marginals obtained by summing over every state path."""

    likelihood: float
    log_likelihood: float
    gamma: np.ndarray
    xi: np.ndarray


class BatchPosteriors(NamedTuple):
    """Posteriors of N equal-length sequences computed together.

    Attributes:
        log_likelihoods: Length-N sequence log-likelihoods
        gamma: N x T x K state occupancy posteriors
        transitions: N x K x K transition posteriors summed over frames
    """

    log_likelihoods: np.ndarray
    gamma: np.ndarray
    transitions: np.ndarray
