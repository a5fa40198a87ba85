"""Numerical toolkit for feasible paths, intrinsic geodesics and set regularity."""

__version__ = "0.1.0"
