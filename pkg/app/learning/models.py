"""Configuration and result types for model training and selection."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from app.core.models import HmmModel

LIKELIHOOD_SLACK = 1e-8


class InitMethod(str, Enum):
    """Parameter initialization strategies."""

    K_BINS = "k_bins"
    K_MEANS = "k_means"


class TrainingConfig(BaseModel):
    """Settings of one EM training run.

    A run is reproducible from (sequences, config): the seed drives every
    random choice made during initialization.
    """

    k: int = Field(3, ge=1, description="Number of hidden states / mixture components (K)")
    init_method: InitMethod = Field(InitMethod.K_BINS.value, description="k_bins or k_means")
    max_iters: int = Field(200, ge=1, description="Maximum number of EM iterations")
    rel_tol: float = Field(1e-6, gt=0, description="Relative log-likelihood improvement threshold")
    seed: int = Field(0, description="Seed for K-means initialization")
    reg_scale: float = Field(
        1e-6, gt=0, description="Covariance regularization: eps = reg_scale * trace / D"
    )
    workers: int = Field(1, ge=1, description="Threads used by the E-step")

    model_config = {"use_enum_values": True, "frozen": True}


@dataclass
class TrainingTrace:
    """Per-iteration record of an EM run.

    Attributes:
        log_likelihoods: Pooled log-likelihood of every evaluated model, in order
        iterations_run: Number of M-steps performed
        converged: True if the relative improvement fell below rel_tol
    """

    log_likelihoods: List[float] = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False

    @property
    def final_log_likelihood(self) -> float:
        return self.log_likelihoods[-1] if self.log_likelihoods else float("-inf")

    def is_monotone(self, slack: float = LIKELIHOOD_SLACK) -> bool:
        """True if no iteration lowered the log-likelihood by more than slack."""
        values = np.asarray(self.log_likelihoods)
        return bool(np.all(np.diff(values) >= -slack))


@dataclass
class BicScan:
    """BIC scores of one model per candidate K.

    Attributes:
        k_values: Candidate state counts, in scan order
        scores: S_BIC per candidate (+inf for failed candidates)
        n_params: Free parameter count per candidate
        log_likelihoods: Pooled log-likelihood per candidate (-inf if failed)
        best_k: Candidate with the lowest score; ties go to the smaller K
        failures: Error message per failed K
        models: Trained model per successful K
    """

    k_values: List[int]
    scores: List[float]
    n_params: List[int]
    log_likelihoods: List[float]
    best_k: int
    failures: Dict[int, str] = field(default_factory=dict)
    models: Dict[int, HmmModel] = field(default_factory=dict)

    def best_model(self) -> Optional[HmmModel]:
        return self.models.get(self.best_k)
