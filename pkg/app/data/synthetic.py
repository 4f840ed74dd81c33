"""Synthetic merge corpora drawn from a known Gaussian HMM.

The default generator mimics a three-phase merge. State centres sit at the
mid-points of typical per-state feature ranges (lead speed difference, lag gap,
ego longitudinal speed); the lateral ego speed differs per state, and the two
low-significance features (dv_lag, dx_lead) are state-independent noise.
Events always start in the first state and move left to right.
"""

from typing import Dict, List, NamedTuple, Tuple

import numpy as np
from pydantic import BaseModel, Field

from app.core.exceptions import ModelError
from app.core.models import FEATURE_NAMES, EventSequence, FeatureSchema, GaussianComponent, HmmModel

from .exceptions import InvalidSynthSpecError
from .models import Corpus


class SynthSpec(BaseModel):
    """Generator configuration: a diagonal-covariance Gaussian HMM plus corpus size."""

    features: List[str] = Field(default_factory=lambda: list(FEATURE_NAMES))
    outputs: List[str] = Field(default_factory=lambda: ["vy_ego"])
    pi: List[float] = Field(default_factory=lambda: [1.0, 0.0, 0.0])
    trans: List[List[float]] = Field(
        default_factory=lambda: [[0.95, 0.05, 0.0], [0.0, 0.95, 0.05], [0.0, 0.0, 1.0]]
    )
    # Columns follow `features`: dv_lead, dx_lag, vx_ego, vy_ego, dv_lag, dx_lead
    means: List[List[float]] = Field(
        default_factory=lambda: [
            [0.25, 5.6, -3.3, 0.2, 0.5, 10.0],
            [-0.55, 6.5, -2.1, 0.5, 0.5, 10.0],
            [-0.95, 7.25, -3.8, 0.1, 0.5, 10.0],
        ]
    )
    stds: List[List[float]] = Field(
        default_factory=lambda: [
            [0.32, 2.0, 0.45, 0.08, 0.6, 3.0],
            [0.18, 0.57, 0.23, 0.08, 0.6, 3.0],
            [0.25, 0.62, 0.3, 0.08, 0.6, 3.0],
        ]
    )
    n_events: int = Field(600, ge=1, description="Number of events to draw")
    length: int = Field(100, ge=2, description="Frames per event")
    frame_ms: int = Field(100, gt=0, description="Frame spacing in milliseconds")

    @property
    def k(self) -> int:
        return len(self.pi)

    def schema(self) -> FeatureSchema:
        try:
            return FeatureSchema(names=tuple(self.features), outputs=tuple(self.outputs))
        except ValueError as e:
            raise InvalidSynthSpecError(f"Invalid generator features: {e}") from e

    def truth_model(self) -> HmmModel:
        """The generating HMM.

        Raises:
            InvalidSynthSpecError: If shapes disagree, probabilities are not
                stochastic or some standard deviation is not positive
        """
        schema = self.schema()
        K, D = self.k, schema.D
        means = np.asarray(self.means, dtype=float)
        stds = np.asarray(self.stds, dtype=float)
        if means.shape != (K, D) or stds.shape != (K, D):
            raise InvalidSynthSpecError(
                f"means and stds must be {K} x {D}, got {means.shape} and {stds.shape}"
            )
        if np.any(stds <= 0.0):
            raise InvalidSynthSpecError("Standard deviations must be positive")
        try:
            return HmmModel(
                pi=self.pi,
                trans=self.trans,
                components=tuple(
                    GaussianComponent(mean=means[k], covariance=np.diag(stds[k] ** 2))
                    for k in range(K)
                ),
                schema=schema,
            )
        except (ModelError, ValueError) as e:
            raise InvalidSynthSpecError(f"Invalid generator model: {e}") from e


class SyntheticDraw(NamedTuple):
    """A generated corpus with its ground truth."""

    corpus: Corpus
    truth: HmmModel
    states: Dict[str, np.ndarray]


def sample_states(pi: np.ndarray, trans: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one length-T state path from (pi, trans)."""
    K = len(pi)
    draws = rng.random(T)
    cumulative_pi = np.cumsum(pi)
    cumulative_trans = np.cumsum(trans, axis=1)
    states = np.empty(T, dtype=int)
    states[0] = min(int(np.searchsorted(cumulative_pi, draws[0], side="right")), K - 1)
    for t in range(1, T):
        row = cumulative_trans[states[t - 1]]
        states[t] = min(int(np.searchsorted(row, draws[t], side="right")), K - 1)
    return states


def _sample_event(
    model: HmmModel, spec: SynthSpec, index: int, rng: np.random.Generator
) -> Tuple[EventSequence, np.ndarray]:
    states = sample_states(model.pi, model.trans, spec.length, rng)
    noise = rng.standard_normal((spec.length, model.D))
    means = np.stack([c.mean for c in model.components])
    factors = np.stack([c.cholesky for c in model.components])
    values = means[states] + np.einsum("tij,tj->ti", factors[states], noise)
    event = EventSequence(
        event_id=f"synth-{index:04d}",
        values=values,
        timestamps=np.arange(spec.length, dtype=float) * spec.frame_ms,
        schema=model.schema,
    )
    return event, states


def synth_corpus_with_states(spec: SynthSpec, seed: int = 0) -> SyntheticDraw:
    """Draw a corpus and keep the hidden state path of every event.

    A fixed seed gives a bitwise-identical draw.
    """
    truth = spec.truth_model()
    rng = np.random.default_rng(seed)
    events = []
    states = {}
    for index in range(spec.n_events):
        event, path = _sample_event(truth, spec, index, rng)
        events.append(event)
        states[event.event_id] = path
    return SyntheticDraw(Corpus(events=tuple(events), schema=truth.schema), truth, states)


def synth_corpus(spec: SynthSpec, seed: int = 0) -> Tuple[Corpus, HmmModel]:
    """Draw a corpus from the generator.

    Returns:
        Tuple of (corpus without split, ground-truth model)

    Raises:
        InvalidSynthSpecError: If the generator configuration is inconsistent
    """
    draw = synth_corpus_with_states(spec, seed)
    return draw.corpus, draw.truth
