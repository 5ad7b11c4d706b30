"""Self-organising heterogeneous small-cell network simulator."""

__version__ = "0.1.0"
