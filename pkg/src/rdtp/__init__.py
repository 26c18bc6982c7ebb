"""Representative days and time points with piecewise-linear transitions for co-planning models."""

__version__ = "0.1.0"
