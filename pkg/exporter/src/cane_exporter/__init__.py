"""Checkpoint-to-container exporter for the caneshuffle classifier."""

__version__ = "0.1.0"
