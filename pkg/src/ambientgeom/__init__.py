"""Numerical conformal ambient metrics and their codimension-two spacelike immersions."""

__version__ = "0.1.0"
