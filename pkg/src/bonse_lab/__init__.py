"""Certified evaluation of Bonse-type inequality thresholds."""

__version__ = "0.1.0"
