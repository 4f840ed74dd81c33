"""Unit tests for hashing utilities."""

from pathlib import Path

import numpy as np

from app.core import EventSequence, FeatureSchema
from app.utils.hashing import compute_config_fingerprint, compute_corpus_fingerprint, hash_string
from tests.helpers import random_event

SCHEMA = FeatureSchema(names=("dv_lead", "vx_ego", "vy_ego"))


def _events(seed=0, n=3):
    rng = np.random.default_rng(seed)
    return [random_event(rng, 6, SCHEMA, f"e{i}") for i in range(n)]


class TestCorpusFingerprint:
    """Tests for compute_corpus_fingerprint function."""

    def test_basic(self):
        """Test that the fingerprint is 16 hex characters."""
        fingerprint = compute_corpus_fingerprint(_events())

        assert len(fingerprint) == 16
        assert all(c in "0123456789abcdef" for c in fingerprint)

    def test_deterministic(self):
        """Test that equal corpora share a fingerprint."""
        assert compute_corpus_fingerprint(_events()) == compute_corpus_fingerprint(_events())

    def test_single_bit_changes_fingerprint(self):
        """Test that the smallest change to one value is detected."""
        events = _events()
        values = np.array(events[1].values)
        values[2, 0] = np.nextafter(values[2, 0], np.inf)
        changed = list(events)
        changed[1] = EventSequence("e1", values, events[1].timestamps, SCHEMA)

        assert compute_corpus_fingerprint(events) != compute_corpus_fingerprint(changed)

    def test_order_and_ids_matter(self):
        """Test that event order and event ids are part of the identity."""
        events = _events()
        renamed = [EventSequence("x" + e.event_id, e.values, e.timestamps, SCHEMA) for e in events]

        assert compute_corpus_fingerprint(events) != compute_corpus_fingerprint(events[::-1])
        assert compute_corpus_fingerprint(events) != compute_corpus_fingerprint(renamed)

    def test_schema_outputs_matter(self):
        """Test that the output block is part of the identity."""
        events = _events(n=1)
        other = FeatureSchema(names=SCHEMA.names, outputs=("vx_ego",))
        relabeled = [EventSequence(e.event_id, e.values, e.timestamps, other) for e in events]

        assert compute_corpus_fingerprint(events) != compute_corpus_fingerprint(relabeled)

    def test_empty(self):
        """Test fingerprinting an empty corpus."""
        assert compute_corpus_fingerprint([]) == hash_string("")[:16]


class TestConfigFingerprint:
    """Tests for compute_config_fingerprint function."""

    def test_key_order_ignored(self):
        """Test that mappings with the same items share a fingerprint."""
        first = compute_config_fingerprint({"k": 3, "init_method": "k_bins", "tol": 1e-4})
        second = compute_config_fingerprint({"tol": 1e-4, "init_method": "k_bins", "k": 3})

        assert first == second
        assert len(first) == 16

    def test_values_matter(self):
        """Test that a changed value changes the fingerprint."""
        assert compute_config_fingerprint({"k": 3}) != compute_config_fingerprint({"k": 4})

    def test_nested_and_non_json_values(self):
        """Test nested mappings and values serialized through str."""
        first = {"training": {"k": 3, "seed": 0}, "output": Path("runs/a")}
        second = {"output": "runs/a", "training": {"seed": 0, "k": 3}}

        assert compute_config_fingerprint(first) == compute_config_fingerprint(second)


class TestHashString:
    """Tests for hash_string function."""

    def test_hash_string_basic(self):
        """Test basic string hashing."""
        hash_val = hash_string("test string")

        # Should return a 64-character hex string (SHA256)
        assert len(hash_val) == 64
        assert all(c in "0123456789abcdef" for c in hash_val)

    def test_hash_string_deterministic(self):
        """Test that string hashing is deterministic."""
        assert hash_string("test string") == hash_string("test string")

    def test_hash_string_case_sensitive(self):
        """Test that string hashing is case-sensitive."""
        assert hash_string("Test String") != hash_string("test string")

    def test_hash_string_empty(self):
        """Test hashing empty string."""
        assert (
            hash_string("")
            == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        )
