"""Model training: initialization, Baum-Welch EM and BIC model-order selection."""

from .em import SufficientStatistics, e_step, fit, fit_gmm, gmm_log_likelihood, m_step
from .exceptions import InitializationError, LearningError, NumericalFailureError
from .initialization import (
    init_gmm,
    init_hmm,
    init_k_bins,
    init_k_means,
    initial_labels,
    k_bins_labels,
    k_means_labels,
)
from .models import BicScan, InitMethod, TrainingConfig, TrainingTrace
from .selection import bic_score, count_parameters, select_k

__all__ = [
    # Training
    "fit",
    "fit_gmm",
    "e_step",
    "m_step",
    "SufficientStatistics",
    "gmm_log_likelihood",
    # Initialization
    "init_k_bins",
    "init_k_means",
    "init_hmm",
    "init_gmm",
    "initial_labels",
    "k_bins_labels",
    "k_means_labels",
    # Model order
    "bic_score",
    "count_parameters",
    "select_k",
    # Types
    "TrainingConfig",
    "TrainingTrace",
    "BicScan",
    "InitMethod",
    # Exceptions
    "LearningError",
    "InitializationError",
    "NumericalFailureError",
]
