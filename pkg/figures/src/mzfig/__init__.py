"""Heatmap figures from mzbell CSV data."""

__version__ = "0.1.0"
