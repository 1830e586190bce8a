"""Numerical spin geometry of the Eguchi-Hanson space and its torus deformation."""

__version__ = "0.1.0"
