"""Rotating vortex patches (V-states) from the conformal-map formulation."""

__version__ = "0.1.0"
