"""Gaussian mixture regression with HMM beliefs (HMM-GMR) and static weights (GMM-GMR)."""

from .gmr import (
    belief_init,
    belief_update,
    gmm_from_hmm,
    gmm_gmr_predict,
    input_log_densities,
    predict_event,
    predict_sequence,
    stationary_distribution,
)
from .models import BeliefTrajectory, PredictiveDistribution

__all__ = [
    "belief_init",
    "belief_update",
    "predict_sequence",
    "gmm_gmr_predict",
    "predict_event",
    "gmm_from_hmm",
    "stationary_distribution",
    "input_log_densities",
    "BeliefTrajectory",
    "PredictiveDistribution",
]
