"""Shared fixtures for the test-suite."""

from __future__ import annotations

import numpy as np
import pytest

from parthines.core.system import PartitionedSystem, SplitState
from parthines.models import linear_block_system
from parthines.schemas.solver import SolverConfig, StageSolveConfig
from parthines.services.harness import clear_reference_cache


# ---------------------------------------------------------------- Fixtures
@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture()
def stage_cfg() -> StageSolveConfig:
    return StageSolveConfig()


@pytest.fixture()
def solver_cfg() -> SolverConfig:
    return SolverConfig()


@pytest.fixture()
def damped_oscillator() -> tuple[np.ndarray, PartitionedSystem, SplitState]:
    """x' = -x + 2y, y' = -2x - 0.5y on [0, 2]."""
    matrix = np.array([[-1.0, 2.0], [-2.0, -0.5]])
    system = linear_block_system(matrix, 1, name="oscillator")
    return matrix, system, SplitState(0.0, np.array([1.0]), np.array([0.5]))


@pytest.fixture(autouse=True)
def _fresh_reference_cache() -> None:
    clear_reference_cache()

