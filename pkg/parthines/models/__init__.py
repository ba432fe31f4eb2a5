"""Benchmark systems: Hodgkin-Huxley, the soma-dendrite-spine model and linear systems."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from parthines.core.errors import UsageError
from parthines.core.linalg import StructuredMatrix
from parthines.core.system import PartitionedSystem, SemilinearData, SplitState
from parthines.models.assembly import split_natural
from parthines.models.config_file import ModelParams, load_model_file
from parthines.models.hh import build_hh, hh_initial_natural
from parthines.models.linear import exact_flow, linear_block_system, linear_test_system
from parthines.models.rates import psi
from parthines.models.sds import build_sds, sds_initial_natural
from parthines.schemas.models import BlockAssignment, HHParams, SDSParams

MODEL_NAMES = ("hh", "sds")


@dataclass(frozen=True, eq=False)
class ModelCase:
    name: str
    system: PartitionedSystem
    initial: SplitState
    t_end: float
    params: Optional[ModelParams] = None
    assignment: str = "-"


def benchmark_initial_conditions(
    model: str, assignment: BlockAssignment = BlockAssignment.VOLTAGES_AS_X
) -> tuple[SplitState, float]:
    """Published initial state (t = 0) and end time of a benchmark."""
    case = model_case(model, assignment)
    return case.initial, case.t_end


def model_case(
    name: str,
    assignment: BlockAssignment = BlockAssignment.VOLTAGES_AS_X,
    params: Optional[ModelParams] = None,
) -> ModelCase:
    if name == "hh":
        hh = params if isinstance(params, HHParams) else HHParams()
        x, y = split_natural(assignment, *hh_initial_natural(hh))
        system = build_hh(hh, assignment)
        return ModelCase(name, system, SplitState(0.0, x, y), hh.t_end, hh, assignment.value)
    if name == "sds":
        sds = params if isinstance(params, SDSParams) else SDSParams()
        x, y = split_natural(assignment, *sds_initial_natural(sds))
        system = build_sds(sds, assignment)
        return ModelCase(name, system, SplitState(0.0, x, y), sds.t_end, sds, assignment.value)
    raise UsageError(f"unknown model {name!r}; choose one of {', '.join(MODEL_NAMES)}")


def resolve_model(
    spec: str, assignment: BlockAssignment = BlockAssignment.VOLTAGES_AS_X
) -> ModelCase:
    """A model name, or the path of a model file."""
    if spec in MODEL_NAMES:
        return model_case(spec, assignment)
    if Path(spec).is_file():
        name, params = load_model_file(spec)
        return model_case(name, assignment, params)
    raise UsageError(
        f"unknown model {spec!r}; choose one of {', '.join(MODEL_NAMES)} or a model file"
    )


def null_case(nx: int = 1, ny: int = 1, t_end: float = 1.0) -> ModelCase:
    """x' = 0, y' = 0."""
    zero_x, zero_y = np.zeros(nx), np.zeros(ny)
    data = SemilinearData(
        a_of_y=lambda y: StructuredMatrix.diagonal(zero_x),
        b_of_yt=lambda y, t, x: zero_x.copy(),
        c_of_xt=lambda x, t, y: zero_y.copy(),
        d_of_x=lambda x: StructuredMatrix.diagonal(zero_y),
    )
    system = PartitionedSystem.from_semilinear("null", nx, ny, data)
    initial = SplitState(0.0, np.linspace(1.0, 2.0, nx), np.linspace(-1.0, -0.5, ny))
    return ModelCase("null", system, initial, t_end)


__all__ = [
    "MODEL_NAMES",
    "ModelCase",
    "benchmark_initial_conditions",
    "build_hh",
    "build_sds",
    "exact_flow",
    "linear_block_system",
    "linear_test_system",
    "model_case",
    "null_case",
    "psi",
    "resolve_model",
]
