"""Utility functions for audit-trail fingerprints."""

from .hashing import compute_config_fingerprint, compute_corpus_fingerprint, hash_string

__all__ = [
    "compute_corpus_fingerprint",
    "compute_config_fingerprint",
    "hash_string",
]
