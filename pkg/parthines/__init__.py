"""Hines-type splitting integrators for semilinear partitioned ODE systems."""

__version__ = "0.1.0"
