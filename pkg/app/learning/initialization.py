"""Initial parameters for EM: K-bins and K-means.

Both initializers reduce to a hard label per frame. Components are fitted to the
frames of each label, pi and the transition matrix are estimated from first
labels and label adjacencies with add-one smoothing, so every initial model is
ergodic and strictly positive.
"""

import warnings
from typing import List, Sequence

import numpy as np
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from app.core.gaussian import DEFAULT_REG_SCALE, regularize_covariance
from app.core.models import EventSequence, FeatureSchema, GaussianComponent, GmmModel, HmmModel
from app.logging import get_logger

from .exceptions import InitializationError
from .models import InitMethod

logger = get_logger(__name__, component="learning")

KMEANS_MAX_ITER = 100


def shared_schema(sequences: Sequence[EventSequence]) -> FeatureSchema:
    """Return the schema common to all sequences.

    Raises:
        InitializationError: If there are no sequences or their schemas differ
    """
    if not sequences:
        raise InitializationError("At least one sequence is required")
    schema = sequences[0].schema
    for seq in sequences[1:]:
        if seq.schema != schema:
            raise InitializationError(
                f"Event {seq.event_id} has schema {seq.schema.names}, expected {schema.names}"
            )
    return schema


def k_bins_labels(sequences: Sequence[EventSequence], K: int) -> List[np.ndarray]:
    """Cut every sequence into K contiguous equal-duration time bins.

    Bin edges are spaced evenly between the first and last timestamp, so
    irregularly sampled events are split by time rather than by frame count.

    Raises:
        InitializationError: If some bin of some sequence holds no frame
    """
    labels = []
    for seq in sequences:
        if seq.T < K:
            raise InitializationError(
                f"Event {seq.event_id} has {seq.T} frames, fewer than K={K} bins"
            )
        ts = seq.timestamps
        edges = np.linspace(ts[0], ts[-1], K + 1)
        bins = np.clip(np.searchsorted(edges, ts, side="right") - 1, 0, K - 1)
        counts = np.bincount(bins, minlength=K)
        if np.any(counts == 0):
            empty = int(np.flatnonzero(counts == 0)[0])
            raise InitializationError(
                f"Event {seq.event_id}: time bin {empty} of {K} contains no frame"
            )
        labels.append(bins)
    return labels


def k_means_labels(sequences: Sequence[EventSequence], K: int, seed: int) -> List[np.ndarray]:
    """Cluster the pooled frames with K-means and split the labels per sequence.

    k-means++ seeding, one initialization, at most 100 Lloyd iterations. A
    cluster left empty is re-seeded with the frame farthest from its own
    centroid among clusters holding more than one frame.

    Raises:
        InitializationError: If fewer frames than clusters are available
    """
    X = np.vstack([seq.values for seq in sequences])
    if X.shape[0] < K:
        raise InitializationError(f"{X.shape[0]} pooled frames cannot form {K} clusters")

    if K == 1:
        flat = np.zeros(X.shape[0], dtype=int)
    else:
        kmeans = KMeans(
            n_clusters=K,
            init="k-means++",
            n_init=1,
            max_iter=KMEANS_MAX_ITER,
            random_state=seed,
        )
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConvergenceWarning)
            flat = kmeans.fit_predict(X).astype(int)
        if any(issubclass(w.category, ConvergenceWarning) for w in caught):
            logger.warning(
                "K-means found fewer distinct clusters than requested",
                extra={"event": "init.kmeans.degenerate", "k": K, "n_frames": X.shape[0]},
            )
        flat = _reseed_empty_clusters(X, flat, kmeans.cluster_centers_, K)

    offsets = np.cumsum([0] + [seq.T for seq in sequences])
    return [flat[offsets[i] : offsets[i + 1]] for i in range(len(sequences))]


def _reseed_empty_clusters(
    X: np.ndarray, labels: np.ndarray, centers: np.ndarray, K: int
) -> np.ndarray:
    labels = labels.copy()
    for k in range(K):
        counts = np.bincount(labels, minlength=K)
        if counts[k] > 0:
            continue
        distances = np.linalg.norm(X - centers[labels], axis=1)
        distances[counts[labels] <= 1] = -1.0
        donor = int(np.argmax(distances))
        logger.warning(
            "Re-seeding empty K-means cluster from the farthest frame",
            extra={"event": "init.kmeans.reseeded", "cluster": k, "frame": donor},
        )
        labels[donor] = k
    return labels


def initial_labels(
    sequences: Sequence[EventSequence], K: int, method: str, seed: int = 0
) -> List[np.ndarray]:
    """Hard per-frame labels from the configured initialization method."""
    if InitMethod(method) == InitMethod.K_BINS:
        return k_bins_labels(sequences, K)
    return k_means_labels(sequences, K, seed)


def components_from_labels(
    sequences: Sequence[EventSequence],
    labels: Sequence[np.ndarray],
    K: int,
    reg_scale: float = DEFAULT_REG_SCALE,
) -> tuple:
    """Fit one Gaussian per label by sample mean and (biased) sample covariance."""
    X = np.vstack([seq.values for seq in sequences])
    flat = np.concatenate(labels)
    components = []
    for k in range(K):
        frames = X[flat == k]
        if frames.shape[0] == 0:
            raise InitializationError(f"Label {k} has no frames")
        mean = frames.mean(axis=0)
        centered = frames - mean
        covariance = centered.T @ centered / frames.shape[0]
        components.append(
            GaussianComponent(mean=mean, covariance=regularize_covariance(covariance, reg_scale))
        )
    return tuple(components)


def chain_from_labels(labels: Sequence[np.ndarray], K: int):
    """Add-one smoothed (pi, trans) from first labels and label adjacencies."""
    first_counts = np.ones(K)
    trans_counts = np.ones((K, K))
    for seq_labels in labels:
        first_counts[seq_labels[0]] += 1.0
        np.add.at(trans_counts, (seq_labels[:-1], seq_labels[1:]), 1.0)
    pi = first_counts / first_counts.sum()
    trans = trans_counts / trans_counts.sum(axis=1, keepdims=True)
    return pi, trans


def _hmm_from_labels(sequences, labels, K: int, reg_scale: float) -> HmmModel:
    pi, trans = chain_from_labels(labels, K)
    return HmmModel(
        pi=pi,
        trans=trans,
        components=components_from_labels(sequences, labels, K, reg_scale),
        schema=shared_schema(sequences),
    )


def init_k_bins(
    sequences: Sequence[EventSequence], K: int, reg_scale: float = DEFAULT_REG_SCALE
) -> HmmModel:
    """Initial HMM from K equal-duration time bins per sequence.

    Raises:
        InitializationError: If a sequence is too short for K bins
    """
    shared_schema(sequences)
    labels = k_bins_labels(sequences, K)
    model = _hmm_from_labels(sequences, labels, K, reg_scale)
    logger.debug(
        "Initialized model from time bins",
        extra={"event": "init.k_bins.completed", "k": K, "n_sequences": len(sequences)},
    )
    return model


def init_k_means(
    sequences: Sequence[EventSequence],
    K: int,
    seed: int = 0,
    reg_scale: float = DEFAULT_REG_SCALE,
) -> HmmModel:
    """Initial HMM from K-means clusters of the pooled frames.

    Raises:
        InitializationError: If fewer frames than clusters are available
    """
    shared_schema(sequences)
    labels = k_means_labels(sequences, K, seed)
    model = _hmm_from_labels(sequences, labels, K, reg_scale)
    logger.debug(
        "Initialized model from K-means clusters",
        extra={"event": "init.k_means.completed", "k": K, "seed": seed},
    )
    return model


def init_hmm(sequences: Sequence[EventSequence], config) -> HmmModel:
    """Dispatch to the initializer named by a TrainingConfig."""
    if InitMethod(config.init_method) == InitMethod.K_BINS:
        return init_k_bins(sequences, config.k, config.reg_scale)
    return init_k_means(sequences, config.k, config.seed, config.reg_scale)


def init_gmm(sequences: Sequence[EventSequence], config) -> GmmModel:
    """Initial mixture: same labels as init_hmm, weights = label frame shares."""
    schema = shared_schema(sequences)
    labels = initial_labels(sequences, config.k, config.init_method, config.seed)
    counts = np.bincount(np.concatenate(labels), minlength=config.k).astype(float)
    return GmmModel(
        weights=counts / counts.sum(),
        components=components_from_labels(sequences, labels, config.k, config.reg_scale),
        schema=schema,
    )
