"""HMM-GMR and GMM-GMR prediction of the output block from the input block.

Both regressors condition every component on the input frame and mix the
component conditionals with activation weights h_k. HMM-GMR computes h
recursively from the previous belief and the transition matrix; GMM-GMR
computes it independently per frame from the static mixture weights. Beliefs
only ever use the input-block marginals N(x^I | mu_k^I, Sigma_k^II).
"""

from typing import Tuple, Union

import numpy as np

from app.core.exceptions import DimensionMismatchError
from app.core.gaussian import conditional_regressor, gaussian_logpdf_frames
from app.core.models import EventSequence, GmmModel, HmmModel
from app.inference.exceptions import ImpossibleObservationError
from app.logging import get_logger

from .models import BeliefTrajectory, PredictiveDistribution

logger = get_logger(__name__, component="regression")

EIGENVALUE_TOLERANCE = 1e-8

AnyModel = Union[HmmModel, GmmModel]


def _input_block(model: AnyModel, seq_inputs) -> np.ndarray:
    X_in = np.asarray(seq_inputs, dtype=float)
    if X_in.ndim == 1:
        X_in = X_in[None, :]
    n_inputs = len(model.schema.input_indices)
    if X_in.ndim != 2 or X_in.shape[1] != n_inputs:
        raise DimensionMismatchError(
            f"Inputs have shape {X_in.shape}, model input block has {n_inputs} features",
            expected=n_inputs,
            actual=X_in.shape[1] if X_in.ndim == 2 else 0,
        )
    if not np.all(np.isfinite(X_in)):
        raise ValueError("Inputs must be finite")
    return X_in


def input_log_densities(model: AnyModel, X_in: np.ndarray) -> np.ndarray:
    """T x K log N(x_t^I | mu_k^I, Sigma_k^II); zeros when the input block is empty."""
    if not model.schema.input_indices:
        return np.zeros((X_in.shape[0], model.K))
    return np.column_stack([gaussian_logpdf_frames(X_in, g) for g in model.input_marginals])


def _normalize(log_weights: np.ndarray, t: int = 0) -> np.ndarray:
    shift = np.max(log_weights)
    if not np.isfinite(shift):
        raise ImpossibleObservationError(
            f"Every state has zero belief mass at frame {t}", t=t
        )
    weights = np.exp(log_weights - shift)
    return weights / weights.sum()


def _log(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(values)


def belief_init(model: HmmModel, x_in) -> np.ndarray:
    """h_k proportional to pi_k N(x^I | mu_k^I, Sigma_k^II).

    Raises:
        ImpossibleObservationError: If every state has zero mass
    """
    X_in = _input_block(model, x_in)
    return _normalize(_log(model.pi) + input_log_densities(model, X_in)[0])


def belief_update(model: HmmModel, h_prev, x_in) -> np.ndarray:
    """One step of the belief recursion.

    h_k proportional to (sum_m h_prev[m] A[m, k]) N(x^I | mu_k^I, Sigma_k^II),
    evaluated in log space with max-subtraction before normalizing.

    Raises:
        ImpossibleObservationError: If every state has zero mass
    """
    X_in = _input_block(model, x_in)
    prior = np.asarray(h_prev, dtype=float) @ model.trans
    return _normalize(_log(prior) + input_log_densities(model, X_in)[0])


def _mixture(model: AnyModel, X_in: np.ndarray, h: np.ndarray):
    regressors = [conditional_regressor(c, model.schema) for c in model.components]
    means = np.stack([r.means(X_in) for r in regressors], axis=1)
    covariances = np.stack([r.covariance for r in regressors])
    trajectory = BeliefTrajectory(h=h)
    distribution = PredictiveDistribution(
        weights=h,
        means=means,
        covariances=covariances,
        output_names=model.schema.output_names,
    )
    return trajectory, distribution


def predict_sequence(
    model: HmmModel, seq_inputs
) -> Tuple[BeliefTrajectory, PredictiveDistribution]:
    """HMM-GMR over a T x |I| input block.

    Returns:
        Tuple of (belief trajectory, full predictive mixture per frame)

    Raises:
        DimensionMismatchError: If the inputs do not match the model's input block
        SingularBlockError: If some Sigma_k^II is near-singular
        ImpossibleObservationError: If a frame leaves no state with nonzero mass
    """
    X_in = _input_block(model, seq_inputs)
    log_densities = input_log_densities(model, X_in)
    h = np.empty_like(log_densities)
    h[0] = _normalize(_log(model.pi) + log_densities[0], 0)
    for t in range(1, X_in.shape[0]):
        h[t] = _normalize(_log(h[t - 1] @ model.trans) + log_densities[t], t)
    return _mixture(model, X_in, h)


def gmm_gmr_predict(
    model: GmmModel, seq_inputs
) -> Tuple[BeliefTrajectory, PredictiveDistribution]:
    """GMM-GMR: h_k(t) proportional to omega_k N(x_t^I | mu_k^I, Sigma_k^II), frame by frame."""
    X_in = _input_block(model, seq_inputs)
    log_weights = _log(model.weights) + input_log_densities(model, X_in)
    h = np.vstack([_normalize(row, t) for t, row in enumerate(log_weights)])
    return _mixture(model, X_in, h)


def predict_event(
    model: AnyModel, event: EventSequence
) -> Tuple[BeliefTrajectory, PredictiveDistribution]:
    """Predict an event's output block with the regressor matching the model kind."""
    try:
        event = event.select(model.schema)
    except KeyError as e:
        raise DimensionMismatchError(str(e), expected=model.D, actual=event.schema.D) from e
    if isinstance(model, HmmModel):
        return predict_sequence(model, event.inputs)
    return gmm_gmr_predict(model, event.inputs)


def stationary_distribution(trans: np.ndarray) -> np.ndarray:
    """Left eigenvector of the transition matrix for eigenvalue 1, normalized.

    Raises:
        ValueError: If eigenvalue 1 is not simple (no unique stationary distribution)
    """
    eigenvalues, eigenvectors = np.linalg.eig(np.asarray(trans).T)
    unit = np.flatnonzero(np.abs(eigenvalues - 1.0) < EIGENVALUE_TOLERANCE)
    if unit.size != 1:
        raise ValueError(f"Eigenvalue 1 has multiplicity {unit.size}")
    vector = np.real(eigenvectors[:, unit[0]])
    vector = vector / vector.sum()
    vector = np.clip(vector, 0.0, None)
    return vector / vector.sum()


def gmm_from_hmm(model: HmmModel) -> GmmModel:
    """Static mixture with the HMM's components and its stationary state distribution.

    A chain without a unique stationary distribution (e.g. A = I) falls back
    to uniform weights with a warning.
    """
    try:
        weights = stationary_distribution(model.trans)
    except ValueError as e:
        logger.warning(
            "Transition matrix has no unique stationary distribution, using uniform weights",
            extra={"event": "regression.stationary.fallback", "k": model.K, "reason": str(e)},
        )
        weights = np.full(model.K, 1.0 / model.K)
    return GmmModel(
        weights=weights, components=model.components, schema=model.schema, source="from_hmm"
    )
