"""Integrators, error control, stability analysis and the experiment harness."""
