"""Finite-volume incompressible flow and conjugate heat transfer on structured grids."""

__version__ = "0.1.0"
