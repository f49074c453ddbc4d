"""Render sdegan CSV artifacts into figures."""

from sdegan_plots.figures import PLOT_KINDS, PlotError, PlotSpec, aggregate_sweep, render

__all__ = ["PLOT_KINDS", "PlotError", "PlotSpec", "aggregate_sweep", "render"]

__version__ = "0.1.0"
