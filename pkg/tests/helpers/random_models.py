"""Random models, sequences and generator specs for property tests."""

from typing import Optional

import numpy as np

from app.core import FEATURE_NAMES, EventSequence, FeatureSchema, GaussianComponent, HmmModel
from app.data import SynthSpec


def random_schema(D: int) -> FeatureSchema:
    """Schema over the first D feature names with the last one as output."""
    names = FEATURE_NAMES[:D]
    return FeatureSchema(names=names, outputs=(names[-1],))


def random_covariance(rng: np.random.Generator, D: int) -> np.ndarray:
    factor = rng.normal(size=(D, D))
    covariance = factor @ factor.T + 0.5 * D * np.eye(D)
    return 0.5 * (covariance + covariance.T)


def random_stochastic(rng: np.random.Generator, K: int) -> np.ndarray:
    """Row-stochastic K x K matrix with strictly positive entries."""
    return rng.dirichlet(np.ones(K), size=K)


def random_hmm(
    rng: np.random.Generator,
    K: int,
    D: int,
    schema: Optional[FeatureSchema] = None,
    spread: float = 2.0,
) -> HmmModel:
    schema = schema or random_schema(D)
    return HmmModel(
        pi=rng.dirichlet(np.ones(K)),
        trans=random_stochastic(rng, K),
        components=tuple(
            GaussianComponent(mean=spread * rng.normal(size=D), covariance=random_covariance(rng, D))
            for _ in range(K)
        ),
        schema=schema,
    )


def random_event(
    rng: np.random.Generator, T: int, schema: FeatureSchema, event_id: str = "random"
) -> EventSequence:
    return EventSequence(
        event_id=event_id,
        values=2.0 * rng.normal(size=(T, schema.D)),
        timestamps=np.arange(T, dtype=float) * 100.0,
        schema=schema,
    )


def three_phase_spec(n_events: int = 60, length: int = 40, **overrides) -> SynthSpec:
    """Small three-state left-to-right generator over two inputs and vy_ego.

    Input means are well separated so both the states and the outputs are
    recoverable from short corpora.
    """
    fields = dict(
        features=["dv_lead", "vx_ego", "vy_ego"],
        outputs=["vy_ego"],
        pi=[1.0, 0.0, 0.0],
        trans=[[0.9, 0.1, 0.0], [0.0, 0.9, 0.1], [0.0, 0.0, 1.0]],
        means=[[1.0, -3.0, 0.2], [-1.0, -1.0, 0.6], [0.0, -5.0, 0.0]],
        stds=[[0.2, 0.2, 0.05], [0.2, 0.2, 0.05], [0.2, 0.2, 0.05]],
        n_events=n_events,
        length=length,
    )
    fields.update(overrides)
    return SynthSpec(**fields)
