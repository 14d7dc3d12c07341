"""Comparison plots for orchestration-simulator metrics CSVs."""

__version__ = "0.1.0"

from .plot import PlotSpec, SchemaError, load_series, render, smooth
