"""Builders shared by several test modules."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from parthines.core.system import PartitionedSystem

DATA_DIR = Path(__file__).parent / "data"


def random_stable_matrix(rng: np.random.Generator, n: int) -> np.ndarray:
    """-(S S^T + I) plus a skew part: every eigenvalue has negative real part."""
    s = rng.normal(size=(n, n)) / np.sqrt(n)
    k = rng.normal(size=(n, n))
    return -(s @ s.T + np.eye(n)) + 0.5 * (k - k.T)


def nan_system(nx: int = 1, ny: int = 1) -> PartitionedSystem:
    """A system whose f block is never finite."""
    return PartitionedSystem(
        name="nan",
        nx=nx,
        ny=ny,
        eval_f=lambda x, y, t: np.full(nx, np.nan),
        eval_g=lambda x, y, t: np.zeros(ny),
        typical_size=np.ones(nx + ny),
    )
