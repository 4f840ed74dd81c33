"""BIC scoring and model-order scans."""

import math
from typing import Iterable, Literal, Sequence, Tuple, Union

from app.core.exceptions import ModelError, NumericalError
from app.core.models import EventSequence, GmmModel, HmmModel
from app.inference import forward
from app.inference.exceptions import InferenceError
from app.logging import get_logger
from app.logging.context import log_context

from .em import fit, gmm_log_likelihood
from .exceptions import LearningError
from .models import BicScan, TrainingConfig

logger = get_logger(__name__, component="learning")

ModelKind = Literal["hmm", "gmm"]


def count_parameters(K: int, D: int, kind: ModelKind = "hmm") -> int:
    """Number of free parameters of a full-covariance model.

    hmm: (K-1) + K(K-1) + K*D + K*D(D+1)/2
    gmm: (K-1) + K*D + K*D(D+1)/2
    """
    n_params = (K - 1) + K * D + K * D * (D + 1) // 2
    if kind == "hmm":
        n_params += K * (K - 1)
    return n_params


def bic_score(
    model: Union[HmmModel, GmmModel], sequences: Sequence[EventSequence]
) -> Tuple[float, int]:
    """S_BIC = -log-likelihood + (n_params / 2) * log(pooled frame count).

    Returns:
        Tuple of (score, n_params)
    """
    n_frames = sum(seq.T for seq in sequences)
    if isinstance(model, HmmModel):
        log_likelihood = sum(forward(model, seq).log_likelihood for seq in sequences)
        n_params = count_parameters(model.K, model.D, "hmm")
    else:
        log_likelihood = sum(
            gmm_log_likelihood(model, seq.select(model.schema).values) for seq in sequences
        )
        n_params = count_parameters(model.K, model.D, "gmm")
    score = -log_likelihood + 0.5 * n_params * math.log(n_frames)
    return float(score), n_params


def select_k(
    sequences: Sequence[EventSequence], k_range: Iterable[int], config: TrainingConfig
) -> BicScan:
    """Train and score one HMM per candidate K.

    Every candidate uses the same config apart from k. A candidate that fails
    to initialize or train is scored +inf and logged; the scan continues.

    Raises:
        ValueError: If k_range is empty
    """
    k_values = [int(k) for k in k_range]
    if not k_values:
        raise ValueError("k_range must contain at least one candidate")

    D = sequences[0].schema.D if sequences else 0
    scan = BicScan(k_values=k_values, scores=[], n_params=[], log_likelihoods=[], best_k=k_values[0])

    for k in k_values:
        candidate = config.model_copy(update={"k": k})
        with log_context(k=k):
            try:
                model, trace = fit(sequences, candidate)
                score, n_params = bic_score(model, sequences)
            except (LearningError, InferenceError, ModelError, NumericalError) as e:
                logger.warning(
                    "BIC candidate failed, scoring it +inf",
                    extra={"event": "bic.candidate.failed", "error": str(e)},
                )
                scan.scores.append(math.inf)
                scan.n_params.append(count_parameters(k, D, "hmm"))
                scan.log_likelihoods.append(-math.inf)
                scan.failures[k] = str(e)
                continue

        scan.scores.append(score)
        scan.n_params.append(n_params)
        scan.log_likelihoods.append(trace.final_log_likelihood)
        scan.models[k] = model
        logger.info(
            "BIC candidate scored",
            extra={"event": "bic.candidate.scored", "k": k, "score": score, "n_params": n_params},
        )

    # Lowest score wins; ties go to the smaller K
    scan.best_k = min(zip(scan.scores, scan.k_values))[1]
    return scan
