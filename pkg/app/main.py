"""Command-line entry point for merge-states.

    merge-states synth        draw a synthetic corpus and its ground-truth model
    merge-states ingest       extract a corpus from track and label files
    merge-states train        fit an HMM (or GMM) and write the model and EM trace
    merge-states select-k     BIC scan over a range of K
    merge-states decode       belief timelines of events under a model
    merge-states predict      HMM-GMR / GMM-GMR predictions of events
    merge-states evaluate     variable sweep and approach comparison tables
    merge-states state-ranges per-state input ranges

Settings resolve as: command-line flag > MERGE_STATES_* environment > config
file > built-in default. Exit codes: 0 success, 1 usage or configuration error,
2 data or format error, 3 numerical failure.
"""

import argparse
import sys
import uuid
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from app.config.environment import EnvironmentConfig
from app.config.exceptions import ConfigurationError
from app.config.loader import load_config
from app.config.models import AppConfig
from app.core.exceptions import ModelError, NumericalError
from app.core.models import EventSequence, FeatureSchema, HmmModel
from app.core.serialization import load_model, save_model
from app.data import (
    FULL_SCHEMA,
    Corpus,
    DataError,
    ExtractionError,
    SynthSpec,
    align_events,
    corpus_fingerprint,
    extract_events,
    load_corpus,
    load_labels,
    load_tracks,
    save_corpus,
    split_corpus,
    synth_corpus_with_states,
)
from app.evaluation import (
    DEFAULT_INPUTS,
    EvaluationConfig,
    EvaluationError,
    run_approach_comparison,
    run_variable_sweep,
    state_ranges,
)
from app.inference.exceptions import InferenceError
from app.learning import LearningError, TrainingConfig, fit, fit_gmm, select_k
from app.logging import get_logger
from app.logging.config import configure_logging
from app.logging.context import log_context
from app.regression import predict_event
from app.reporting import (
    ReportError,
    ReportHeader,
    belief_table,
    prediction_table,
    write_bic,
    write_csv,
    write_scores,
    write_state_ranges,
    write_trace,
)
from app.utils.hashing import compute_config_fingerprint

logger = get_logger(__name__, component="cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


class UsageError(Exception):
    """Raised for invalid command lines."""

    pass


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as exceptions instead of exiting with 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage().strip()}")


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}") from None
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {number}")
    return number


def _name_list(value: str) -> List[str]:
    names = [name.strip() for name in value.split(",") if name.strip()]
    if not names:
        raise argparse.ArgumentTypeError("expected a comma-separated list of feature names")
    return names


# --- Settings ---------------------------------------------------------------


def resolve_settings(
    args: argparse.Namespace,
) -> Tuple[AppConfig, EnvironmentConfig, str, str]:
    """
    Load configuration and apply environment and flag overrides.

    Returns:
        Tuple of (AppConfig, EnvironmentConfig, log level, log format)

    Raises:
        ConfigurationError: If the configuration is invalid
    """
    app_config, env_config = load_config(args.config)

    training_update: Dict[str, object] = {}
    for flag, field in (
        ("k", "k"),
        ("init", "init_method"),
        ("seed", "seed"),
        ("max_iters", "max_iters"),
        ("rel_tol", "rel_tol"),
        ("reg_scale", "reg_scale"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            training_update[field] = value

    workers = args.workers or env_config.workers
    evaluation = app_config.evaluation
    if workers:
        training_update["workers"] = workers
        evaluation = evaluation.model_copy(update={"workers": workers})

    try:
        training = TrainingConfig.model_validate(
            {**app_config.training.model_dump(), **training_update}
        )
    except ValueError as e:
        raise ConfigurationError("Invalid training options", errors=[str(e)]) from e

    app_config = app_config.model_copy(update={"training": training, "evaluation": evaluation})

    # Log level priority: CLI > environment > config
    log_level = args.log_level or env_config.log_level or app_config.logging.level
    log_format = args.log_format or env_config.log_format or app_config.logging.format
    return app_config, env_config, log_level, log_format


def _header(
    command: str,
    config: AppConfig,
    seed: Optional[int] = None,
    corpus: Optional[Corpus] = None,
    **extra: str,
) -> ReportHeader:
    return ReportHeader(
        command=command,
        seed=seed,
        config_fingerprint=compute_config_fingerprint(config.fingerprint_payload(command)),
        corpus_fingerprint=corpus_fingerprint(corpus) if corpus is not None else None,
        extra={key: str(value) for key, value in extra.items()},
    )


def _schema(args: argparse.Namespace, corpus: Corpus) -> FeatureSchema:
    """Input features from --features (default: dv_lead, dx_lag, vx_ego) plus the output block."""
    inputs = args.features or list(DEFAULT_INPUTS)
    outputs = args.outputs or list(corpus.schema.outputs)
    try:
        return FeatureSchema.from_inputs(inputs, outputs)
    except ValueError as e:
        raise UsageError(f"Invalid feature selection: {e}") from e


def _training_events(corpus: Corpus) -> List[EventSequence]:
    """Training split when the corpus has one, otherwise every event."""
    return corpus.train_events if corpus.split is not None else list(corpus.events)


def _selected_events(corpus: Corpus, args: argparse.Namespace) -> List[EventSequence]:
    if args.event:
        missing = [event_id for event_id in args.event if event_id not in corpus.event_ids]
        if missing:
            raise KeyError(f"Events not in corpus: {', '.join(missing)}")
        return [corpus.get(event_id) for event_id in args.event]
    if args.split == "train":
        return corpus.train_events
    if args.split == "test":
        return corpus.test_events
    return list(corpus.events)


def _announce(paths: Sequence[Path]) -> None:
    for path in paths:
        print(path)


# --- Commands ---------------------------------------------------------------


def cmd_synth(args: argparse.Namespace, config: AppConfig) -> List[Path]:
    """Draw a corpus from the generator, split it and write it with the truth model."""
    updates = {
        name: value
        for name, value in (("n_events", args.n_events), ("length", args.length))
        if value is not None
    }
    spec = SynthSpec.model_validate({**config.synth.model_dump(), **updates})
    seed = config.training.seed

    draw = synth_corpus_with_states(spec, seed)
    split = split_corpus(draw.corpus, config.data.train_fraction, config.data.split_seed)
    corpus = draw.corpus.with_split(split)

    out = Path(args.out)
    save_corpus(corpus, out)
    save_model(draw.truth, out / "truth_model.yaml")

    states = pd.concat(
        [
            pd.DataFrame(
                {"event_id": event_id, "frame": range(len(path)), "state": path + 1}
            )
            for event_id, path in draw.states.items()
        ],
        ignore_index=True,
    )
    header = _header("synth", config, seed=seed, corpus=corpus)
    states_path = write_csv(out / "states.csv", header, states)
    return [out / "events.csv", out / "manifest.yaml", out / "truth_model.yaml", states_path]


def cmd_ingest(args: argparse.Namespace, config: AppConfig) -> List[Path]:
    """Extract, align and split merge events from recorded tracks."""
    tracks = load_tracks(args.tracks, delimiter=args.delimiter)
    labels = load_labels(args.labels, delimiter=args.delimiter)
    events, skipped = extract_events(tracks, labels, FULL_SCHEMA, config.training.workers)
    if not events:
        raise ExtractionError(f"No merge event could be extracted ({len(skipped)} skipped)")

    if not args.no_align:
        events = align_events(events, config.data.align_length)
    corpus = Corpus(events=tuple(events), schema=FULL_SCHEMA)
    if len(corpus) >= 2:
        corpus = corpus.with_split(
            split_corpus(corpus, config.data.train_fraction, config.data.split_seed)
        )

    out = Path(args.out)
    save_corpus(corpus, out)
    header = _header("ingest", config, corpus=corpus)
    skipped_table = pd.DataFrame(
        {"event_id": list(skipped), "reason": [r.splitlines()[0] for r in skipped.values()]},
        columns=["event_id", "reason"],
    )
    skipped_path = write_csv(out / "skipped.csv", header, skipped_table)
    return [out / "events.csv", out / "manifest.yaml", skipped_path]


def cmd_train(args: argparse.Namespace, config: AppConfig) -> List[Path]:
    """Fit a model on the training split and write it with its EM trace."""
    corpus = load_corpus(args.corpus)
    schema = _schema(args, corpus)
    events = _training_events(corpus.select(schema))
    training = config.training

    if args.approach == "gmm":
        model, trace = fit_gmm(events, training)
    else:
        model, trace = fit(events, training)

    out = Path(args.out)
    model_path = out / "model.yaml"
    save_model(model, model_path)
    header = _header(
        "train",
        config,
        seed=training.seed,
        corpus=corpus,
        features=schema.describe(),
        kind=args.approach,
        converged=str(trace.converged).lower(),
    )
    trace_path = write_trace(out / "trace.csv", header, trace)
    return [model_path, trace_path]


def cmd_select_k(args: argparse.Namespace, config: AppConfig) -> List[Path]:
    """Train one HMM per K and write the BIC table."""
    corpus = load_corpus(args.corpus)
    schema = _schema(args, corpus)
    events = _training_events(corpus.select(schema))
    k_min = args.k_min if args.k_min is not None else config.selection.k_min
    k_max = args.k_max if args.k_max is not None else config.selection.k_max
    if k_max < k_min:
        raise UsageError(f"--k-max ({k_max}) must not be below --k-min ({k_min})")

    scan = select_k(events, range(k_min, k_max + 1), config.training)
    header = _header("select-k", config, seed=config.training.seed, corpus=corpus)
    paths = write_bic(Path(args.out), header, scan, schema.describe())
    if len(scan.failures) == len(scan.k_values):
        raise LearningError(f"Every candidate K failed: {scan.failures}")
    return paths


def _load_model_and_corpus(args: argparse.Namespace):
    model = load_model(args.model)
    corpus = load_corpus(args.corpus)
    return model, corpus


def cmd_decode(args: argparse.Namespace, config: AppConfig) -> List[Path]:
    """Write per-frame beliefs and dominant states of the selected events."""
    model, corpus = _load_model_and_corpus(args)
    tables = []
    for event in _selected_events(corpus, args):
        with log_context(event_id=event.event_id):
            trajectory, _ = predict_event(model, event)
        tables.append(belief_table(event, trajectory))
    header = _header("decode", config, corpus=corpus, model=str(args.model), K=str(model.K))
    return [write_csv(Path(args.out) / "beliefs.csv", header, pd.concat(tables, ignore_index=True))]


def cmd_predict(args: argparse.Namespace, config: AppConfig) -> List[Path]:
    """Write point estimates and per-component predictive mixtures of the selected events."""
    model, corpus = _load_model_and_corpus(args)
    tables = []
    for event in _selected_events(corpus, args):
        with log_context(event_id=event.event_id):
            trajectory, distribution = predict_event(model, event)
        reference = event.select(model.schema).outputs
        tables.append(prediction_table(event, trajectory, distribution, reference))
    kind = "hmm_gmr" if isinstance(model, HmmModel) else "gmm_gmr"
    header = _header("predict", config, corpus=corpus, model=str(args.model), regressor=kind)
    path = Path(args.out) / "predictions.csv"
    return [write_csv(path, header, pd.concat(tables, ignore_index=True))]


def cmd_evaluate(args: argparse.Namespace, config: AppConfig) -> List[Path]:
    """Run the variable sweep and/or the approach comparison on the train/test split."""
    corpus = load_corpus(args.corpus)
    if corpus.split is None:
        corpus = corpus.with_split(
            split_corpus(corpus, config.data.train_fraction, config.data.split_seed)
        )
    settings = config.evaluation
    evaluation = EvaluationConfig(
        training=config.training,
        gmm_source=args.gmm_source or settings.gmm_source,
        workers=settings.workers,
    )
    header = _header(
        "evaluate",
        config,
        seed=config.training.seed,
        corpus=corpus,
        gmm_source=evaluation.gmm_source,
    )
    out = Path(args.out)
    paths: List[Path] = []

    if args.protocol in ("sweep", "all"):
        feature_sets = args.feature_set or settings.feature_sets
        reports = run_variable_sweep(corpus, feature_sets, evaluation)
        paths += write_scores(
            out, "variables", header, reports, "HMM-GMR by input variables", by="features"
        )

    if args.protocol in ("compare", "all"):
        schema = _schema(args, corpus)
        reports = run_approach_comparison(
            corpus,
            schema,
            evaluation,
            approaches=args.approach or settings.approaches,
            inits=args.init_method or settings.inits,
        )
        paths += write_scores(
            out,
            "approaches",
            header,
            reports,
            f"Approaches on {schema.describe()}",
            by="approach",
        )
    return paths


def cmd_state_ranges(args: argparse.Namespace, config: AppConfig) -> List[Path]:
    """Write the min/max of every input feature over the frames each state dominates."""
    model, corpus = _load_model_and_corpus(args)
    events = _selected_events(corpus, args)
    ranges = state_ranges(model, events)
    kind = "hmm" if isinstance(model, HmmModel) else "gmm"
    label = f"{kind} K={model.K} ({model.schema.describe()})"
    header = _header("state-ranges", config, corpus=corpus, model=str(args.model))
    return write_state_ranges(Path(args.out), header, ranges, model.schema.input_names, label)


COMMANDS: Dict[str, Callable[[argparse.Namespace, AppConfig], List[Path]]] = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "select-k": cmd_select_k,
    "decode": cmd_decode,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "state-ranges": cmd_state_ranges,
}


# --- Parser -----------------------------------------------------------------


def build_parser() -> CommandParser:
    common = CommandParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Configuration file (optional)")
    common.add_argument(
        "--log-level", default=None, choices=LOG_LEVELS, help="Log level (overrides config and environment)"
    )
    common.add_argument(
        "--log-format", default=None, choices=["json", "key-value"], help="Log line format"
    )
    common.add_argument("--workers", type=_positive_int, default=None, help="Worker threads")

    training = CommandParser(add_help=False)
    training.add_argument("--k", type=_positive_int, default=None, help="Number of states K")
    training.add_argument("--init", default=None, choices=["k_bins", "k_means"], help="Initialization")
    training.add_argument("--seed", type=int, default=None, help="Random seed")
    training.add_argument("--max-iters", type=_positive_int, default=None, help="EM iteration cap")
    training.add_argument("--rel-tol", type=float, default=None, help="EM convergence threshold")
    training.add_argument("--reg-scale", type=float, default=None, help="Covariance regularization")

    features = CommandParser(add_help=False)
    features.add_argument(
        "--features", type=_name_list, default=None, help="Comma-separated input features"
    )
    features.add_argument(
        "--outputs", type=_name_list, default=None, help="Comma-separated output features"
    )

    selection = CommandParser(add_help=False)
    selection.add_argument("--event", action="append", default=None, help="Event id (repeatable)")
    selection.add_argument(
        "--split", default="all", choices=["all", "train", "test"], help="Events to process"
    )

    parser = CommandParser(
        prog="merge-states",
        description="HMM-GMR modelling of internal states in highway on-ramp merges",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True

    synth = subparsers.add_parser(
        "synth", parents=[common, training], help="Draw a synthetic corpus"
    )
    synth.add_argument("--out", type=Path, required=True, help="Corpus directory to write")
    synth.add_argument("--n-events", type=_positive_int, default=None)
    synth.add_argument("--length", type=_positive_int, default=None, help="Frames per event")

    ingest = subparsers.add_parser(
        "ingest", parents=[common], help="Extract a corpus from track and label files"
    )
    ingest.add_argument("--tracks", type=Path, required=True, help="Track CSV file")
    ingest.add_argument("--labels", type=Path, required=True, help="Merge label CSV file")
    ingest.add_argument("--out", type=Path, required=True, help="Corpus directory to write")
    ingest.add_argument("--delimiter", default=",", help="Field delimiter of both files")
    ingest.add_argument("--no-align", action="store_true", help="Keep recorded event lengths")

    train = subparsers.add_parser(
        "train", parents=[common, training, features], help="Fit a model"
    )
    train.add_argument("--corpus", type=Path, required=True)
    train.add_argument("--approach", default="hmm", choices=["hmm", "gmm"])
    train.add_argument("--out", type=Path, required=True, help="Output directory")

    select = subparsers.add_parser(
        "select-k", parents=[common, training, features], help="BIC scan over K"
    )
    select.add_argument("--corpus", type=Path, required=True)
    select.add_argument("--k-min", type=_positive_int, default=None)
    select.add_argument("--k-max", type=_positive_int, default=None)
    select.add_argument("--out", type=Path, required=True, help="Output directory")

    for name, help_text in (
        ("decode", "Belief timelines under a model"),
        ("predict", "Predictions of a model"),
        ("state-ranges", "Per-state input ranges"),
    ):
        sub = subparsers.add_parser(name, parents=[common, selection], help=help_text)
        sub.add_argument("--model", type=Path, required=True, help="Model document")
        sub.add_argument("--corpus", type=Path, required=True)
        sub.add_argument("--out", type=Path, required=True, help="Output directory")

    evaluate = subparsers.add_parser(
        "evaluate", parents=[common, training, features], help="Evaluation protocols"
    )
    evaluate.add_argument("--corpus", type=Path, required=True)
    evaluate.add_argument(
        "--protocol", default="all", choices=["sweep", "compare", "all"], help="Tables to produce"
    )
    evaluate.add_argument(
        "--feature-set",
        type=_name_list,
        action="append",
        default=None,
        help="Input set of the sweep (repeatable; default: config)",
    )
    evaluate.add_argument(
        "--approach", action="append", default=None, choices=["hmm_gmr", "gmm_gmr"]
    )
    evaluate.add_argument(
        "--init-method", action="append", default=None, choices=["k_bins", "k_means"]
    )
    evaluate.add_argument("--gmm-source", default=None, choices=["independent", "from_hmm"])
    evaluate.add_argument("--out", type=Path, required=True, help="Output directory")
    return parser


# --- Entry point ------------------------------------------------------------


def _fail(message: str, code: int, error: BaseException) -> int:
    print(message, file=sys.stderr)
    logger.error(
        message.splitlines()[0],
        extra={"event": "cli.command.failed", "error_type": type(error).__name__, "exit_code": code},
    )
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point for merge-states.

    Args:
        argv: Command-line arguments (default: sys.argv[1:])

    Returns:
        Exit code (0 success, 1 usage/configuration, 2 data, 3 numerical failure).
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE

    try:
        app_config, env_config, log_level, log_format = resolve_settings(args)
    except ConfigurationError as e:
        print(f"Configuration Error: {e}", file=sys.stderr)
        return EXIT_USAGE

    configure_logging(level=log_level, format_type=log_format, environment=env_config.environment)

    with log_context(command=args.command, run_id=uuid.uuid4().hex[:8]):
        try:
            paths = COMMANDS[args.command](args, app_config)
        except UsageError as e:
            return _fail(str(e), EXIT_USAGE, e)
        except NumericalError as e:
            return _fail(f"Numerical failure: {e}", EXIT_NUMERIC, e)
        except (
            DataError,
            ModelError,
            InferenceError,
            LearningError,
            EvaluationError,
            FileNotFoundError,
            KeyError,
            ValueError,
        ) as e:
            return _fail(f"Data error: {e}", EXIT_DATA, e)
        except ReportError as e:
            return _fail(f"Report error: {e}", EXIT_USAGE, e)

        _announce(paths)
        logger.info(
            "Command completed",
            extra={"event": "cli.command.completed", "outputs": [str(p) for p in paths]},
        )
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
