"""Sparse superimposed coding link-level simulator."""

__version__ = "1.0.0"
