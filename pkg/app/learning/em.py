"""Baum-Welch EM over multiple event sequences, and frame-wise EM for mixtures.

The E-step stacks equal-length sequences into fixed-size batches, runs the
scaled forward/backward pass on each batch and reduces the posteriors to
SufficientStatistics. Batches are built from the input alone and their partial
statistics are added in batch order, so thread-pool runs are bitwise identical
to single-threaded ones.

Moments are accumulated around the pooled data mean (the "shift") to keep the
second-moment subtraction well conditioned.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce
from operator import add
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from app.core.exceptions import NumericalError
from app.core.gaussian import gaussian_logpdf_frames, regularize_covariance
from app.core.models import EventSequence, GaussianComponent, GmmModel, HmmModel
from app.inference import batch_posteriors_from_log_densities, emission_log_densities, posteriors
from app.logging import get_logger
from app.logging.context import map_in_context

from .exceptions import NumericalFailureError
from .initialization import init_gmm, init_hmm, shared_schema
from .models import LIKELIHOOD_SLACK, TrainingConfig, TrainingTrace

logger = get_logger(__name__, component="learning")

COLLAPSE_FRACTION = 1e-8
BATCH_SIZE = 64


@dataclass
class SufficientStatistics:
    """Expected counts and weighted moments of one or more sequences.

    Attributes:
        log_likelihood: Summed sequence log-likelihoods
        n_sequences: Number of sequences reduced into these statistics
        first_state: Sum of gamma_1 over sequences (K)
        transitions: Sum of xi over sequences and frames (K x K)
        occupancy: Sum of gamma over sequences and frames (K)
        first_moment: Gamma-weighted sums of shifted frames (K x D)
        second_moment: Gamma-weighted sums of shifted outer products (K x D x D)
    """

    log_likelihood: float
    n_sequences: int
    first_state: np.ndarray
    transitions: np.ndarray
    occupancy: np.ndarray
    first_moment: np.ndarray
    second_moment: np.ndarray

    def __add__(self, other: "SufficientStatistics") -> "SufficientStatistics":
        return SufficientStatistics(
            log_likelihood=self.log_likelihood + other.log_likelihood,
            n_sequences=self.n_sequences + other.n_sequences,
            first_state=self.first_state + other.first_state,
            transitions=self.transitions + other.transitions,
            occupancy=self.occupancy + other.occupancy,
            first_moment=self.first_moment + other.first_moment,
            second_moment=self.second_moment + other.second_moment,
        )

    @classmethod
    def from_sequence(
        cls, model: HmmModel, X: np.ndarray, shift: np.ndarray
    ) -> "SufficientStatistics":
        """E-step contribution of one T x D sequence."""
        result = posteriors(model, X)
        gamma = result.gamma
        centered = X - shift
        return cls(
            log_likelihood=result.log_likelihood,
            n_sequences=1,
            first_state=gamma[0].copy(),
            transitions=result.xi.sum(axis=0),
            occupancy=gamma.sum(axis=0),
            first_moment=gamma.T @ centered,
            second_moment=np.einsum("tk,td,te->kde", gamma, centered, centered),
        )

    @classmethod
    def from_batch(
        cls, model: HmmModel, X: np.ndarray, shift: np.ndarray
    ) -> "SufficientStatistics":
        """E-step contribution of an N x T x D stack of equal-length sequences."""
        N, T, D = X.shape
        log_densities = emission_log_densities(model, X.reshape(N * T, D)).reshape(N, T, model.K)
        result = batch_posteriors_from_log_densities(model.pi, model.trans, log_densities)
        gamma = result.gamma
        centered = X - shift
        return cls(
            log_likelihood=float(np.sum(result.log_likelihoods)),
            n_sequences=N,
            first_state=gamma[:, 0].sum(axis=0),
            transitions=result.transitions.sum(axis=0),
            occupancy=gamma.sum(axis=(0, 1)),
            first_moment=np.einsum("ntk,ntd->kd", gamma, centered),
            second_moment=np.einsum("ntk,ntd,nte->kde", gamma, centered, centered),
        )


def sequence_batches(
    observations: Sequence[np.ndarray], batch_size: int = BATCH_SIZE
) -> List[np.ndarray]:
    """Stack sequences of equal length into batches of at most batch_size.

    Lengths are grouped in order of first appearance and sequences keep their
    input order inside a group, so the batches depend only on the input.
    """
    groups: Dict[int, List[np.ndarray]] = {}
    for X in observations:
        groups.setdefault(X.shape[0], []).append(X)
    return [
        np.stack(group[start : start + batch_size])
        for group in groups.values()
        for start in range(0, len(group), batch_size)
    ]


def e_step(
    model: HmmModel,
    observations: Sequence[np.ndarray],
    shift: np.ndarray,
    workers: int = 1,
    batch_size: int = BATCH_SIZE,
) -> SufficientStatistics:
    """Reduce every sequence's posteriors into one SufficientStatistics.

    Batches are formed independently of workers and reduced in batch order.
    """
    batches = sequence_batches(observations, batch_size)
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(
                map_in_context(
                    executor, lambda X: SufficientStatistics.from_batch(model, X, shift), batches
                )
            )
    else:
        parts = [SufficientStatistics.from_batch(model, X, shift) for X in batches]
    return reduce(add, parts)


def _updated_components(
    previous: Tuple[GaussianComponent, ...],
    occupancy: np.ndarray,
    first_moment: np.ndarray,
    second_moment: np.ndarray,
    shift: np.ndarray,
    reg_scale: float,
    iteration: int,
) -> Tuple[GaussianComponent, ...]:
    total = float(occupancy.sum())
    components = []
    for k, mass in enumerate(occupancy):
        if mass < COLLAPSE_FRACTION * total:
            logger.warning(
                "Component lost its posterior mass, keeping previous parameters",
                extra={
                    "event": "em.component.collapsed",
                    "component_index": k,
                    "mass": float(mass),
                    "iteration": iteration,
                },
            )
            components.append(previous[k])
            continue
        centered_mean = first_moment[k] / mass
        covariance = second_moment[k] / mass - np.outer(centered_mean, centered_mean)
        components.append(
            GaussianComponent(
                mean=centered_mean + shift,
                covariance=regularize_covariance(covariance, reg_scale),
            )
        )
    return tuple(components)


def m_step(
    model: HmmModel,
    stats: SufficientStatistics,
    shift: np.ndarray,
    reg_scale: float,
    iteration: int = 0,
) -> HmmModel:
    """Closed-form maximization of the expected complete-data log-likelihood.

    Transition rows that received no expected transitions keep their previous
    values. The returned model is validated by the HmmModel constructor.
    """
    pi = stats.first_state / stats.n_sequences
    pi = pi / pi.sum()

    row_mass = stats.transitions.sum(axis=1, keepdims=True)
    trans = np.array(model.trans, copy=True)
    active = row_mass[:, 0] > 0.0
    trans[active] = stats.transitions[active] / row_mass[active]

    components = _updated_components(
        model.components,
        stats.occupancy,
        stats.first_moment,
        stats.second_moment,
        shift,
        reg_scale,
        iteration,
    )
    return HmmModel(pi=pi, trans=trans, components=components, schema=model.schema)


def _relative_improvement(current: float, previous: float) -> float:
    return (current - previous) / max(abs(previous), np.finfo(float).tiny)


def _check_finite(log_likelihood: float, iteration: int) -> None:
    if not np.isfinite(log_likelihood):
        raise NumericalFailureError(
            f"Log-likelihood became {log_likelihood} at EM iteration {iteration}",
            iteration=iteration,
        )


def _record_iteration(trace: TrainingTrace, log_likelihood: float, iteration: int, k: int) -> None:
    if trace.log_likelihoods and log_likelihood < trace.log_likelihoods[-1] - LIKELIHOOD_SLACK:
        logger.warning(
            "Log-likelihood decreased between iterations",
            extra={
                "event": "em.likelihood.decreased",
                "iteration": iteration,
                "previous": trace.log_likelihoods[-1],
                "current": log_likelihood,
            },
        )
    trace.log_likelihoods.append(float(log_likelihood))
    logger.debug(
        "EM iteration completed",
        extra={
            "event": "em.iteration.completed",
            "iteration": iteration,
            "k": k,
            "log_likelihood": float(log_likelihood),
        },
    )


def _observations(sequences: Sequence[EventSequence]) -> List[np.ndarray]:
    shared_schema(sequences)
    return [np.asarray(seq.values) for seq in sequences]


def fit(
    sequences: Sequence[EventSequence],
    config: TrainingConfig,
    initial_model: Optional[HmmModel] = None,
) -> Tuple[HmmModel, TrainingTrace]:
    """Train an HMM by Baum-Welch EM pooled over all sequences.

    Iterates E- and M-steps until the relative log-likelihood improvement
    (L_t - L_{t-1}) / |L_{t-1}| falls below config.rel_tol or max_iters
    M-steps have run. The returned model is the last one whose likelihood was
    evaluated.

    Args:
        sequences: Training events sharing one feature schema
        config: Training settings
        initial_model: Starting point; built with config.init_method if omitted

    Returns:
        Tuple of (trained model, trace)

    Raises:
        InitializationError: If initial parameters cannot be built
        NumericalFailureError: If the log-likelihood becomes non-finite
    """
    observations = _observations(sequences)
    shift = np.vstack(observations).mean(axis=0)
    model = initial_model if initial_model is not None else init_hmm(sequences, config)
    trace = TrainingTrace()

    logger.info(
        "Training HMM",
        extra={
            "event": "em.fit.started",
            "k": model.K,
            "init_method": config.init_method,
            "n_sequences": len(observations),
            "n_frames": int(sum(X.shape[0] for X in observations)),
        },
    )

    for iteration in range(config.max_iters + 1):
        try:
            stats = e_step(model, observations, shift, config.workers)
        except NumericalError as e:
            raise NumericalFailureError(
                f"E-step failed at EM iteration {iteration}: {e}", iteration=iteration
            ) from e
        _check_finite(stats.log_likelihood, iteration)
        _record_iteration(trace, stats.log_likelihood, iteration, model.K)

        if len(trace.log_likelihoods) > 1:
            improvement = _relative_improvement(
                trace.log_likelihoods[-1], trace.log_likelihoods[-2]
            )
            if improvement < config.rel_tol:
                trace.converged = True
                break
        if iteration == config.max_iters:
            break
        model = m_step(model, stats, shift, config.reg_scale, iteration)

    trace.iterations_run = len(trace.log_likelihoods) - 1
    logger.info(
        "HMM training finished",
        extra={
            "event": "em.fit.completed",
            "k": model.K,
            "iterations": trace.iterations_run,
            "converged": trace.converged,
            "log_likelihood": trace.final_log_likelihood,
        },
    )
    return model, trace


def gmm_log_responsibilities(model: GmmModel, X: np.ndarray) -> np.ndarray:
    """N x K matrix of log(omega_k N(x_n | mu_k, Sigma_k))."""
    with np.errstate(divide="ignore"):
        log_weights = np.log(model.weights)
    return log_weights + np.column_stack(
        [gaussian_logpdf_frames(X, c) for c in model.components]
    )


def gmm_log_likelihood(model: GmmModel, X: np.ndarray) -> float:
    """Summed frame log-likelihood of a mixture (frames treated as independent)."""
    return float(np.sum(logsumexp(gmm_log_responsibilities(model, X), axis=1)))


def fit_gmm(
    sequences: Sequence[EventSequence],
    config: TrainingConfig,
    initial_model: Optional[GmmModel] = None,
) -> Tuple[GmmModel, TrainingTrace]:
    """Train an independent Gaussian mixture on the pooled frames by EM.

    Uses the same initializers, convergence rule and regularization as fit();
    the temporal order of frames is ignored.

    Raises:
        InitializationError: If initial parameters cannot be built
        NumericalFailureError: If the log-likelihood becomes non-finite
    """
    X = np.vstack(_observations(sequences))
    shift = X.mean(axis=0)
    centered = X - shift
    model = initial_model if initial_model is not None else init_gmm(sequences, config)
    trace = TrainingTrace()

    for iteration in range(config.max_iters + 1):
        log_joint = gmm_log_responsibilities(model, X)
        log_norm = logsumexp(log_joint, axis=1)
        log_likelihood = float(np.sum(log_norm))
        _check_finite(log_likelihood, iteration)
        _record_iteration(trace, log_likelihood, iteration, model.K)

        if len(trace.log_likelihoods) > 1:
            improvement = _relative_improvement(
                trace.log_likelihoods[-1], trace.log_likelihoods[-2]
            )
            if improvement < config.rel_tol:
                trace.converged = True
                break
        if iteration == config.max_iters:
            break

        resp = np.exp(log_joint - log_norm[:, None])
        occupancy = resp.sum(axis=0)
        components = _updated_components(
            model.components,
            occupancy,
            resp.T @ centered,
            np.einsum("nk,nd,ne->kde", resp, centered, centered),
            shift,
            config.reg_scale,
            iteration,
        )
        weights = occupancy / occupancy.sum()
        model = GmmModel(weights=weights, components=components, schema=model.schema)

    trace.iterations_run = len(trace.log_likelihoods) - 1
    logger.info(
        "GMM training finished",
        extra={
            "event": "em.fit_gmm.completed",
            "k": model.K,
            "iterations": trace.iterations_run,
            "converged": trace.converged,
            "log_likelihood": trace.final_log_likelihood,
        },
    )
    return model, trace
