"""Experiment protocols: variable sweep, approach comparison and state ranges.

Every configuration trains on the corpus training split and is scored on the
test split, so all reports of one run share identical data. Configurations run
on a thread pool and come back in configuration order.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field

from app.core.exceptions import ModelError, NumericalError
from app.core.models import EventSequence, FeatureSchema, GmmModel, HmmModel
from app.data.models import Corpus
from app.inference.exceptions import InferenceError
from app.learning import LearningError, TrainingConfig, fit, fit_gmm
from app.logging import get_logger
from app.logging.context import log_context, map_in_context
from app.regression import gmm_from_hmm, predict_event

from .exceptions import UndefinedSkillScoreError
from .metrics import score_event
from .models import EvaluationReport, ExperimentDescriptor, GmmSource, StateRange

logger = get_logger(__name__, component="evaluation")

AnyModel = Union[HmmModel, GmmModel]

# Input sets of the variable-selection sweep, smallest to largest
DEFAULT_FEATURE_SETS: Tuple[Tuple[str, ...], ...] = (
    ("dv_lead",),
    ("dx_lag",),
    ("vx_ego",),
    ("dv_lead", "dx_lag"),
    ("dv_lead", "vx_ego"),
    ("dx_lag", "vx_ego"),
    ("dv_lead", "dx_lag", "vx_ego"),
    ("dv_lead", "dx_lag", "vx_ego", "dv_lag"),
    ("dv_lead", "dx_lag", "vx_ego", "dx_lead"),
    ("dv_lead", "dx_lag", "vx_ego", "dv_lag", "dx_lead"),
)
DEFAULT_INPUTS: Tuple[str, ...] = ("dv_lead", "dx_lag", "vx_ego")

FAILURES = (LearningError, InferenceError, ModelError, NumericalError, KeyError, ValueError)


class EvaluationConfig(BaseModel):
    """Settings shared by every configuration of one protocol run."""

    training: TrainingConfig = Field(default_factory=TrainingConfig)
    gmm_source: GmmSource = "independent"
    workers: int = Field(1, ge=1, description="Configurations evaluated in parallel")


def evaluate_model(
    model: AnyModel, events: Sequence[EventSequence], descriptor: ExperimentDescriptor
) -> EvaluationReport:
    """Score a trained model on events.

    Events whose reference output is constant are excluded with a reason
    rather than scored.
    """
    report = EvaluationReport(descriptor=descriptor)
    for event in events:
        _, distribution = predict_event(model, event)
        reference = event.select(model.schema).outputs
        try:
            report.per_event.append(
                score_event(distribution.point_estimate, reference, event.event_id)
            )
        except UndefinedSkillScoreError as e:
            report.excluded[event.event_id] = str(e)
            logger.warning(
                "Excluding event from scores",
                extra={"event": "evaluation.event.excluded", "event_id": event.event_id},
            )
    return report


def train_model(
    descriptor: ExperimentDescriptor, events: Sequence[EventSequence], training: TrainingConfig
) -> AnyModel:
    """Train the model a descriptor calls for on already schema-restricted events."""
    config = training.model_copy(
        update={"k": descriptor.k, "init_method": descriptor.init_method}
    )
    if descriptor.approach == "hmm_gmr":
        return fit(events, config)[0]
    if descriptor.gmm_source == "from_hmm":
        return gmm_from_hmm(fit(events, config)[0])
    return fit_gmm(events, config)[0]


def run_configuration(
    corpus: Corpus, descriptor: ExperimentDescriptor, training: TrainingConfig
) -> EvaluationReport:
    """Train on the training split and score on the test split.

    A configuration that fails is returned as a report carrying the error.
    """
    with log_context(config=descriptor.label, features=descriptor.features_label):
        try:
            restricted = corpus.select(descriptor.schema())
            model = train_model(descriptor, restricted.train_events, training)
            report = evaluate_model(model, restricted.test_events, descriptor)
        except FAILURES as e:
            logger.warning(
                "Configuration failed",
                extra={"event": "evaluation.config.failed", "error": str(e)},
            )
            return EvaluationReport(descriptor=descriptor, error=str(e))

        logger.info(
            "Configuration evaluated",
            extra={
                "event": "evaluation.config.completed",
                "mean_skill": report.mean_skill,
                "mean_rmse": report.mean_rmse,
                "n_scored": len(report.per_event),
                "n_excluded": len(report.excluded),
            },
        )
        return report


def run_configurations(
    corpus: Corpus,
    descriptors: Sequence[ExperimentDescriptor],
    training: TrainingConfig,
    workers: int = 1,
) -> List[EvaluationReport]:
    """Evaluate descriptors, in parallel when workers > 1, returning reports in input order."""
    if corpus.split is None:
        raise ValueError("Corpus has no train/test split")
    if workers > 1 and len(descriptors) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(
                map_in_context(executor, lambda d: run_configuration(corpus, d, training), descriptors)
            )
    return [run_configuration(corpus, d, training) for d in descriptors]


def _inputs_of(feature_set: Union[FeatureSchema, Iterable[str]]) -> Tuple[Tuple[str, ...], Optional[Tuple[str, ...]]]:
    if isinstance(feature_set, FeatureSchema):
        return feature_set.input_names, feature_set.outputs
    return tuple(feature_set), None


def run_variable_sweep(
    corpus: Corpus,
    feature_sets: Iterable[Union[FeatureSchema, Iterable[str]]] = DEFAULT_FEATURE_SETS,
    config: Optional[EvaluationConfig] = None,
) -> List[EvaluationReport]:
    """Evaluate HMM-GMR on every input set; reports sorted by mean skill, best first.

    Feature sets are schemas or plain input-name lists; every set must predict
    the corpus output block. Ties keep sweep order, failed configurations sort
    last.

    Raises:
        ValueError: If a feature set has a different output block
    """
    config = config or EvaluationConfig()
    outputs = corpus.schema.outputs
    descriptors = []
    for feature_set in feature_sets:
        inputs, set_outputs = _inputs_of(feature_set)
        if set_outputs is not None and set_outputs != outputs:
            raise ValueError(f"Feature set predicts {set_outputs}, corpus output block is {outputs}")
        descriptors.append(
            ExperimentDescriptor(
                inputs=inputs,
                outputs=outputs,
                approach="hmm_gmr",
                init_method=config.training.init_method,
                k=config.training.k,
            )
        )

    reports = run_configurations(corpus, descriptors, config.training, config.workers)
    return sorted(reports, key=lambda r: r.sort_key(), reverse=True)


def run_approach_comparison(
    corpus: Corpus,
    schema: Optional[FeatureSchema] = None,
    config: Optional[EvaluationConfig] = None,
    approaches: Sequence[str] = ("hmm_gmr", "gmm_gmr"),
    inits: Sequence[str] = ("k_bins", "k_means"),
) -> List[EvaluationReport]:
    """Evaluate every approach x initialization pair on one feature set.

    Reports come back in approach-major order: HMM-GMR(k_bins),
    HMM-GMR(k_means), GMM-GMR(k_bins), GMM-GMR(k_means).
    """
    config = config or EvaluationConfig()
    schema = schema or FeatureSchema.from_inputs(DEFAULT_INPUTS, corpus.schema.outputs)
    descriptors = [
        ExperimentDescriptor(
            inputs=schema.input_names,
            outputs=schema.outputs,
            approach=approach,
            init_method=init,
            k=config.training.k,
            gmm_source=config.gmm_source if approach == "gmm_gmr" else None,
        )
        for approach in approaches
        for init in inits
    ]
    return run_configurations(corpus, descriptors, config.training, config.workers)


def state_ranges(model: AnyModel, events: Sequence[EventSequence]) -> List[StateRange]:
    """Min and max of every input feature over the frames each state dominates.

    States that never dominate a frame come back with n_frames = 0.
    """
    names = model.schema.input_names
    per_state: Dict[int, List[np.ndarray]] = {k: [] for k in range(model.K)}
    for event in events:
        trajectory, _ = predict_event(model, event)
        inputs = event.select(model.schema).inputs
        dominant = trajectory.dominant_state
        for k in range(model.K):
            frames = inputs[dominant == k]
            if frames.shape[0]:
                per_state[k].append(frames)

    ranges = []
    for k in range(model.K):
        if not per_state[k]:
            ranges.append(StateRange(state=k, n_frames=0, minimum={}, maximum={}))
            continue
        frames = np.vstack(per_state[k])
        ranges.append(
            StateRange(
                state=k,
                n_frames=int(frames.shape[0]),
                minimum={name: float(v) for name, v in zip(names, frames.min(axis=0))},
                maximum={name: float(v) for name, v in zip(names, frames.max(axis=0))},
            )
        )
    return ranges
