"""Scaled forward/backward recursions for Gaussian-emission HMMs.

Emission densities are evaluated in log space. Each frame's log densities are
shifted by their maximum before exponentiation, and the forward variables are
renormalized every step; the log normalizers carry both the shift and the sum,
so their total is the exact sequence log-likelihood.

The recursions are exposed at two levels: on (model, sequence) pairs, and on a
raw T x K matrix of log emission densities. The second form lets callers run
the same recursion over derived emissions (e.g. input-block marginals).
"""

from typing import Union

import numpy as np

from app.core.exceptions import DimensionMismatchError
from app.core.gaussian import gaussian_logpdf_frames
from app.core.models import EventSequence, HmmModel

from .exceptions import ImpossibleObservationError
from .models import BatchPosteriors, ForwardBackwardResult, ForwardPass

Observations = Union[EventSequence, np.ndarray]


def as_observations(model: HmmModel, seq: Observations) -> np.ndarray:
    """Return the T x D observation matrix of a sequence in the model's schema.

    Raises:
        DimensionMismatchError: If the frames do not match the model dimension
    """
    if isinstance(seq, EventSequence):
        if seq.schema != model.schema:
            try:
                seq = seq.select(model.schema)
            except KeyError as e:
                raise DimensionMismatchError(
                    str(e), expected=model.schema.D, actual=seq.schema.D
                ) from e
        return seq.values
    X = np.asarray(seq, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.D or X.shape[0] < 1:
        raise DimensionMismatchError(
            f"Observations have shape {X.shape}, model expects T x {model.D}",
            expected=model.D,
            actual=X.shape[1] if X.ndim == 2 else 0,
        )
    return X


def emission_log_densities(model, X: np.ndarray) -> np.ndarray:
    """T x K matrix of log N(x_t | mu_k, Sigma_k)."""
    return np.column_stack([gaussian_logpdf_frames(X, c) for c in model.components])


def _shifted_emissions(log_densities: np.ndarray):
    shifts = np.max(log_densities, axis=1)
    bad = np.flatnonzero(~np.isfinite(shifts))
    if bad.size:
        t = int(bad[0])
        raise ImpossibleObservationError(
            f"Every component density underflows at frame {t}", t=t
        )
    return np.exp(log_densities - shifts[:, None]), shifts


def forward_from_log_densities(
    pi: np.ndarray, trans: np.ndarray, log_densities: np.ndarray
) -> ForwardPass:
    """Scaled forward recursion over precomputed log emission densities.

    alpha_1(k) = pi_k b_1(k); alpha_t(k) = b_t(k) sum_m alpha_{t-1}(m) A_mk,
    renormalized at every step.

    Raises:
        ImpossibleObservationError: If no reachable state explains some frame
    """
    emissions, shifts = _shifted_emissions(log_densities)
    T, K = emissions.shape
    scaled_alpha = np.empty((T, K))
    log_scales = np.empty(T)

    alpha = pi * emissions[0]
    for t in range(T):
        if t > 0:
            alpha = (scaled_alpha[t - 1] @ trans) * emissions[t]
        norm = alpha.sum()
        if not np.isfinite(norm) or norm <= 0.0:
            raise ImpossibleObservationError(
                f"No reachable state has nonzero density at frame {t}", t=t
            )
        scaled_alpha[t] = alpha / norm
        log_scales[t] = np.log(norm) + shifts[t]

    return ForwardPass(scaled_alpha, log_scales, float(np.sum(log_scales)))


def backward_from_log_densities(
    trans: np.ndarray, log_densities: np.ndarray, log_scales: np.ndarray
) -> np.ndarray:
    """Backward recursion scaled by the forward normalizers.

    beta_T(k) = 1; beta_t(k) = sum_m A_km b_{t+1}(m) beta_{t+1}(m) / c_{t+1}.
    """
    emissions, shifts = _shifted_emissions(log_densities)
    T, K = emissions.shape
    norms = np.exp(np.asarray(log_scales) - shifts)
    scaled_beta = np.empty((T, K))
    scaled_beta[T - 1] = 1.0
    for t in range(T - 2, -1, -1):
        scaled_beta[t] = trans @ (emissions[t + 1] * scaled_beta[t + 1]) / norms[t + 1]
    return scaled_beta


def posteriors_from_log_densities(
    pi: np.ndarray, trans: np.ndarray, log_densities: np.ndarray
) -> ForwardBackwardResult:
    """State and transition posteriors over precomputed log emission densities."""
    scaled_alpha, log_scales, log_likelihood = forward_from_log_densities(
        pi, trans, log_densities
    )
    scaled_beta = backward_from_log_densities(trans, log_densities, log_scales)

    gamma = scaled_alpha * scaled_beta
    gamma /= gamma.sum(axis=1, keepdims=True)

    emissions, shifts = _shifted_emissions(log_densities)
    norms = np.exp(log_scales - shifts)
    xi = (
        scaled_alpha[:-1, :, None]
        * trans[None, :, :]
        * (emissions[1:] * scaled_beta[1:])[:, None, :]
        / norms[1:, None, None]
    )
    if xi.shape[0]:
        xi /= xi.sum(axis=(1, 2), keepdims=True)

    return ForwardBackwardResult(
        log_likelihood=log_likelihood,
        gamma=gamma,
        xi=xi,
        scaled_alpha=scaled_alpha,
        scaled_beta=scaled_beta,
        log_scales=log_scales,
    )


def batch_posteriors_from_log_densities(
    pi: np.ndarray, trans: np.ndarray, log_densities: np.ndarray
) -> BatchPosteriors:
    """Forward/backward over an N x T x K stack of log emission densities.

    Runs the same scaled recursions as posteriors_from_log_densities, one frame
    at a time for all N sequences. Only frame-summed transition posteriors are
    kept.

    Raises:
        ImpossibleObservationError: If no reachable state explains some frame
    """
    shifts = np.max(log_densities, axis=2)
    finite = np.isfinite(shifts)
    if not finite.all():
        n, t = (int(i) for i in np.argwhere(~finite)[0])
        raise ImpossibleObservationError(
            f"Every component density underflows at frame {t} of sequence {n}", t=t
        )
    emissions = np.exp(log_densities - shifts[:, :, None])
    N, T, K = emissions.shape
    alpha = np.empty((N, T, K))
    norms = np.empty((N, T))

    current = pi * emissions[:, 0]
    for t in range(T):
        if t > 0:
            current = (alpha[:, t - 1, :, None] * trans).sum(axis=1) * emissions[:, t]
        norm = current.sum(axis=1)
        valid = np.isfinite(norm) & (norm > 0.0)
        if not valid.all():
            n = int(np.flatnonzero(~valid)[0])
            raise ImpossibleObservationError(
                f"No reachable state has nonzero density at frame {t} of sequence {n}", t=t
            )
        alpha[:, t] = current / norm[:, None]
        norms[:, t] = norm

    beta = np.empty((N, T, K))
    beta[:, T - 1] = 1.0
    for t in range(T - 2, -1, -1):
        weighted = emissions[:, t + 1] * beta[:, t + 1]
        beta[:, t] = (trans * weighted[:, None, :]).sum(axis=2) / norms[:, t + 1, None]

    gamma = alpha * beta
    gamma /= gamma.sum(axis=2, keepdims=True)

    xi = (
        alpha[:, :-1, :, None]
        * trans
        * (emissions[:, 1:] * beta[:, 1:])[:, :, None, :]
        / norms[:, 1:, None, None]
    )
    if T > 1:
        xi /= xi.sum(axis=(2, 3), keepdims=True)

    return BatchPosteriors(
        log_likelihoods=np.sum(np.log(norms) + shifts, axis=1),
        gamma=gamma,
        transitions=xi.sum(axis=1),
    )


def forward(model: HmmModel, seq: Observations) -> ForwardPass:
    """Scaled forward pass of a sequence under a model.

    Returns:
        ForwardPass(scaled_alpha, log_scales, log_likelihood)

    Raises:
        DimensionMismatchError: If the sequence does not match the model schema
        ImpossibleObservationError: If some frame cannot be explained by any state
    """
    X = as_observations(model, seq)
    return forward_from_log_densities(model.pi, model.trans, emission_log_densities(model, X))


def backward(model: HmmModel, seq: Observations, log_scales: np.ndarray) -> np.ndarray:
    """Scaled backward pass using the log normalizers of forward() on the same pair."""
    X = as_observations(model, seq)
    return backward_from_log_densities(model.trans, emission_log_densities(model, X), log_scales)


def posteriors(model: HmmModel, seq: Observations) -> ForwardBackwardResult:
    """Run forward and backward and combine them into gamma and xi."""
    X = as_observations(model, seq)
    return posteriors_from_log_densities(model.pi, model.trans, emission_log_densities(model, X))
