"""Merge States - interpretable internal states of on-ramp merging via HMM-GMR."""

__version__ = "1.0.0"
