"""Spectral computations for Laplacians on manifolds with cylindrical ends."""

__version__ = "0.1.0"
