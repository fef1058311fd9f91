"""Figure rendering for anticoord sweep CSVs."""

from .render import FigureSpec, SchemaError, ratio_series, render, timing_series

__version__ = "0.1.0"
