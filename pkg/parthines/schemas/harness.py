from typing import Optional

from pydantic import BaseModel, Field, field_validator

from parthines.schemas.models import BlockAssignment
from parthines.schemas.solver import AdaptiveMethod


def tolerance_grid(k_max: int = 48) -> list[float]:
    """TOL_k = 10^(-2 - k/8), k = 0..k_max."""
    return [10.0 ** (-2.0 - k / 8.0) for k in range(k_max + 1)]


class SweepSpec(BaseModel):
    model: str
    methods: list[AdaptiveMethod] = Field(min_length=1)
    assignment: BlockAssignment = BlockAssignment.VOLTAGES_AS_X
    tol_list: list[float] = Field(default_factory=tolerance_grid, min_length=1)
    # final-error envelope, as a multiple of TOL
    error_envelope: float = Field(default=100.0, gt=0.0)

    @field_validator("tol_list")
    @classmethod
    def _strictly_decreasing(cls, v: list[float]) -> list[float]:
        if any(tol <= 0.0 for tol in v):
            raise ValueError("tolerances must be positive")
        if any(later >= earlier for earlier, later in zip(v, v[1:])):
            raise ValueError("tol_list must be strictly decreasing")
        return v


class WorkPrecisionPoint(BaseModel):
    model: str
    method: str
    assignment: str
    tol: float
    fevals: float = Field(ge=0.0)
    jacevals: int = Field(ge=0)
    accepted: int = Field(ge=0)
    rejected: int = Field(ge=0)
    final_error: float
    failed: bool = False
    message: Optional[str] = None


class ConvergencePoint(BaseModel):
    h: float
    n_steps: int
    fevals: float
    final_error: float


class ConvergenceTable(BaseModel):
    model: str
    method: str
    assignment: str
    points: list[ConvergencePoint]
    slope: float
