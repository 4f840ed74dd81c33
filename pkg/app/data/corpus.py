"""Corpus splitting and on-disk persistence.

A corpus directory holds two files:

    events.csv      event_id, timestamp_ms, <feature columns in schema order>
    manifest.yaml   format, version, schema, event ids, split and fingerprint

Values are written with full float precision so a reloaded corpus has the same
fingerprint as the saved one.
"""

from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, Field, ValidationError

from app.core.models import EventSequence, FeatureSchema
from app.logging import get_logger
from app.utils.hashing import compute_corpus_fingerprint

from .exceptions import CorpusFormatError
from .models import Corpus, SplitManifest

logger = get_logger(__name__, component="data")

CORPUS_FORMAT = "merge-states-corpus"
CORPUS_VERSION = 1
EVENTS_FILE = "events.csv"
MANIFEST_FILE = "manifest.yaml"


class CorpusManifest(BaseModel):
    """Structure of manifest.yaml."""

    format: str = CORPUS_FORMAT
    version: int = CORPUS_VERSION
    names: List[str] = Field(..., min_length=1)
    outputs: List[str] = Field(..., min_length=1)
    event_ids: List[str]
    fingerprint: str
    split: Optional[SplitManifest] = None


def split_corpus(corpus: Corpus, fraction: float = 0.8, seed: int = 0) -> SplitManifest:
    """Randomly assign round(fraction * N) events to training, the rest to test.

    Both id lists keep corpus order. With at least two events each side gets
    at least one event.

    Raises:
        ValueError: If fraction is not strictly between 0 and 1
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie strictly between 0 and 1, got {fraction}")
    n_events = len(corpus)
    n_train = int(round(fraction * n_events))
    if n_events >= 2:
        n_train = min(max(n_train, 1), n_events - 1)

    rng = np.random.default_rng(seed)
    chosen = set(rng.permutation(n_events)[:n_train].tolist())
    ids = corpus.event_ids
    return SplitManifest(
        train_ids=[ids[i] for i in range(n_events) if i in chosen],
        test_ids=[ids[i] for i in range(n_events) if i not in chosen],
        fraction=fraction,
        seed=seed,
    )


def save_corpus(corpus: Corpus, directory: Path) -> Path:
    """Write events.csv and manifest.yaml into a directory (created if needed)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    frames = []
    for event in corpus.events:
        frame = pd.DataFrame(event.values, columns=list(corpus.schema.names))
        frame.insert(0, "timestamp_ms", event.timestamps)
        frame.insert(0, "event_id", event.event_id)
        frames.append(frame)
    columns = ["event_id", "timestamp_ms", *corpus.schema.names]
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)
    table.to_csv(directory / EVENTS_FILE, index=False, float_format="%.17g")

    manifest = CorpusManifest(
        names=list(corpus.schema.names),
        outputs=list(corpus.schema.outputs),
        event_ids=corpus.event_ids,
        fingerprint=compute_corpus_fingerprint(corpus.events),
        split=corpus.split,
    )
    (directory / MANIFEST_FILE).write_text(
        yaml.safe_dump(manifest.model_dump(), sort_keys=False, default_flow_style=None, width=120),
        encoding="utf-8",
    )
    logger.info(
        "Saved corpus",
        extra={
            "event": "corpus.saved",
            "directory": str(directory),
            "n_events": len(corpus),
            "fingerprint": manifest.fingerprint,
        },
    )
    return directory


def _read_manifest(directory: Path) -> CorpusManifest:
    path = directory / MANIFEST_FILE
    if not path.exists():
        raise FileNotFoundError(f"Corpus manifest not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        manifest = CorpusManifest.model_validate(raw)
    except yaml.YAMLError as e:
        raise CorpusFormatError(f"{path}: invalid YAML: {e}") from e
    except ValidationError as e:
        raise CorpusFormatError(f"{path}: invalid manifest: {e}") from e
    if manifest.format != CORPUS_FORMAT or manifest.version != CORPUS_VERSION:
        raise CorpusFormatError(
            f"{path}: unsupported corpus format {manifest.format!r} version {manifest.version}"
        )
    return manifest


def load_corpus(directory: Path, verify: bool = True) -> Corpus:
    """Read a corpus directory written by save_corpus.

    Args:
        directory: Corpus directory
        verify: Check the recomputed fingerprint against the manifest

    Raises:
        FileNotFoundError: If the directory or one of its files is missing
        CorpusFormatError: If the files are inconsistent
    """
    directory = Path(directory)
    manifest = _read_manifest(directory)
    events_path = directory / EVENTS_FILE
    if not events_path.exists():
        raise FileNotFoundError(f"Corpus events file not found: {events_path}")

    try:
        schema = FeatureSchema(names=tuple(manifest.names), outputs=tuple(manifest.outputs))
    except ValueError as e:
        raise CorpusFormatError(f"{directory}: invalid schema in manifest: {e}") from e

    table = pd.read_csv(events_path, dtype={"event_id": str}, float_precision="round_trip")
    missing = [c for c in ("event_id", "timestamp_ms", *schema.names) if c not in table.columns]
    if missing:
        raise CorpusFormatError(f"{events_path}: missing columns {missing}")

    grouped = {event_id: group for event_id, group in table.groupby("event_id", sort=False)}
    events: List[EventSequence] = []
    try:
        for event_id in manifest.event_ids:
            if event_id not in grouped:
                raise CorpusFormatError(f"{events_path}: no frames for event {event_id}")
            group = grouped[event_id]
            events.append(
                EventSequence(
                    event_id=event_id,
                    values=group[list(schema.names)].to_numpy(dtype=float),
                    timestamps=group["timestamp_ms"].to_numpy(dtype=float),
                    schema=schema,
                )
            )
        corpus = Corpus(events=tuple(events), schema=schema, split=manifest.split)
    except ValueError as e:
        raise CorpusFormatError(f"{directory}: {e}") from e

    if verify:
        fingerprint = compute_corpus_fingerprint(corpus.events)
        if fingerprint != manifest.fingerprint:
            raise CorpusFormatError(
                f"{directory}: fingerprint {fingerprint} does not match manifest "
                f"{manifest.fingerprint}"
            )
    return corpus


def corpus_fingerprint(corpus: Corpus) -> str:
    return compute_corpus_fingerprint(corpus.events)
