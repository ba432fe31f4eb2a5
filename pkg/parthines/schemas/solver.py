from typing import Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator

AdaptiveMethod = Literal["modhines", "modhext", "modhnew"]
ConstantMethod = Literal["hines", "cmhines", "pr"]


class StageSolveConfig(BaseModel):
    newton_tol: float = Field(default=1e-12, gt=0.0)
    newton_max_iter: int = Field(default=25, ge=1)
    use_semilinear_fastpath: bool = True


class ControllerSettings(BaseModel):
    """PI step-size controller constants (PI.4.2 by default)."""

    # k-scaled gains for h * safety * (1/r_n)^b1 * (r_{n-1}/r_n)^b2
    k_beta1: float = 0.4
    k_beta2: float = 0.2
    safety: float = Field(default=0.9, gt=0.0, le=1.0)
    growth_max: float = Field(default=3.0, gt=1.0)
    shrink_min: float = Field(default=0.2, gt=0.0, lt=1.0)
    reject_max: float = Field(default=0.5, gt=0.0, lt=1.0)


class SolverConfig(BaseModel):
    stage: StageSolveConfig = Field(default_factory=StageSolveConfig)
    controller: ControllerSettings = Field(default_factory=ControllerSettings)
    h0: Optional[float] = Field(default=None, gt=0.0)
    h_min: Optional[float] = Field(default=None, gt=0.0)
    h_max: Optional[float] = Field(default=None, gt=0.0)
    max_consecutive_failures: int = Field(default=20, ge=1)
    embedded_derivative: Literal["divided_difference", "hermite"] = "divided_difference"
    warmup_steps: int = Field(default=2, ge=0)
    # keep every accepted step in the RunRecord (off: only the endpoints)
    keep_trajectory: bool = True

    @model_validator(mode="after")
    def _check_limits(self) -> "SolverConfig":
        if self.h_min is not None and self.h_max is not None and self.h_min > self.h_max:
            raise ValueError("h_min must not exceed h_max")
        return self


class ToleranceSpec(BaseModel):
    """|err_i| <= TOL |z_i| + AbsTol_i for every component."""

    rel_tol: float = Field(gt=0.0)
    abs_tol: Optional[list[float]] = None

    @model_validator(mode="after")
    def _check_abs(self) -> "ToleranceSpec":
        if self.abs_tol is not None and any(value <= 0.0 for value in self.abs_tol):
            raise ValueError("abs_tol entries must be positive")
        return self

    def resolve(self, typical_size: Sequence[float]) -> np.ndarray:
        """Absolute tolerances, defaulting to typical_size * TOL."""
        size = np.asarray(typical_size, dtype=float)
        if self.abs_tol is None:
            return size * self.rel_tol
        if len(self.abs_tol) != size.shape[0]:
            raise ValueError(f"abs_tol has {len(self.abs_tol)} entries, expected {size.shape[0]}")
        return np.asarray(self.abs_tol, dtype=float)
