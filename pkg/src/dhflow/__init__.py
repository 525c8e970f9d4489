"""Numerical laboratory for a regularized Dirac-harmonic map heat flow on flat 2-tori."""

from dhflow.grid import GridSpec, SpinStructure

__all__ = ["GridSpec", "SpinStructure"]

__version__ = "0.1.0"
