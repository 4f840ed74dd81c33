"""Test suite for merge-states."""
