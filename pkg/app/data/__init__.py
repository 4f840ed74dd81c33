"""Recording ingestion, feature extraction, alignment, synthetic corpora and splits."""

from .alignment import DEFAULT_ALIGN_LENGTH, align_event, align_events
from .corpus import corpus_fingerprint, load_corpus, save_corpus, split_corpus
from .exceptions import (
    CorpusFormatError,
    DataError,
    ExtractionError,
    InvalidSynthSpecError,
    TrackFormatError,
)
from .extraction import FULL_SCHEMA, extract_event, extract_events, index_tracks
from .models import Corpus, MergeEventLabel, SplitManifest, TrackRecord
from .synthetic import SynthSpec, SyntheticDraw, sample_states, synth_corpus, synth_corpus_with_states
from .tracks import load_labels, load_tracks

__all__ = [
    # Records and containers
    "TrackRecord",
    "MergeEventLabel",
    "SplitManifest",
    "Corpus",
    # Ingestion
    "load_tracks",
    "load_labels",
    "extract_event",
    "extract_events",
    "index_tracks",
    "FULL_SCHEMA",
    "align_event",
    "align_events",
    "DEFAULT_ALIGN_LENGTH",
    # Synthetic corpora
    "SynthSpec",
    "SyntheticDraw",
    "synth_corpus",
    "synth_corpus_with_states",
    "sample_states",
    # Splits and persistence
    "split_corpus",
    "save_corpus",
    "load_corpus",
    "corpus_fingerprint",
    # Exceptions
    "DataError",
    "TrackFormatError",
    "ExtractionError",
    "InvalidSynthSpecError",
    "CorpusFormatError",
]
