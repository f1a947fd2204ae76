"""Ruin-minimizing controls for one-dimensional controlled diffusions."""

__version__ = "0.1.0"
