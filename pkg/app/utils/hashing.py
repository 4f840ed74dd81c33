"""Hashing utilities for the audit trail of command outputs.

This module provides deterministic fingerprints for:
- corpus_fingerprint: identity of a set of event sequences (ids, schema, values)
- config_fingerprint: identity of a configuration mapping
"""

import hashlib
import json
from typing import Any, Iterable, Mapping

import numpy as np

FINGERPRINT_LENGTH = 16


def hash_string(value: str) -> str:
    """Compute SHA256 hash of a string value.

    Args:
        value: String to hash

    Returns:
        Hexadecimal string representation of SHA256 hash (64 characters)
    """
    hash_obj = hashlib.sha256(value.encode("utf-8"))
    return hash_obj.hexdigest()


def compute_corpus_fingerprint(events: Iterable[Any]) -> str:
    """Fingerprint event sequences by id, schema, timestamps and values.

    Values are hashed as little-endian float64 bytes, so two corpora share a
    fingerprint only if every frame is bit-identical.

    Args:
        events: EventSequence instances, in corpus order

    Returns:
        First 16 hex characters of the SHA256 digest
    """
    hash_obj = hashlib.sha256()
    for event in events:
        header = f"{event.event_id}|{','.join(event.schema.names)}|{','.join(event.schema.outputs)}"
        hash_obj.update(header.encode("utf-8"))
        hash_obj.update(np.ascontiguousarray(event.timestamps, dtype="<f8").tobytes())
        hash_obj.update(np.ascontiguousarray(event.values, dtype="<f8").tobytes())
    return hash_obj.hexdigest()[:FINGERPRINT_LENGTH]


def compute_config_fingerprint(config: Mapping[str, Any]) -> str:
    """Fingerprint a configuration mapping independent of key order.

    Example:
        >>> compute_config_fingerprint({"k": 3, "init_method": "k_bins"})
        == compute_config_fingerprint({"init_method": "k_bins", "k": 3})
        True
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hash_string(canonical)[:FINGERPRINT_LENGTH]
