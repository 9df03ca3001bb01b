"""Discrete holomorphic geometry on bi-colored triangulated surfaces."""

__version__ = "0.1.0"
