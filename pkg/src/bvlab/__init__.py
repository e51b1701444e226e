"""Exact BV-BRST engine with a finite-dimensional Ward laboratory."""

__version__ = "0.1.0"
