"""Simulated robot sensor campaigns and from-scratch classifiers for scenario recognition."""

__version__ = "0.1.0"
