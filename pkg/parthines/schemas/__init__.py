from .harness import (
    ConvergencePoint,
    ConvergenceTable,
    SweepSpec,
    WorkPrecisionPoint,
    tolerance_grid,
)
from .models import BlockAssignment, HHParams, SDSParams
from .solver import (
    AdaptiveMethod,
    ConstantMethod,
    ControllerSettings,
    SolverConfig,
    StageSolveConfig,
    ToleranceSpec,
)
from .stability import (
    RecursionMethod,
    StabilityFunctions,
    StabilityVerdict,
    TestSystemParams,
)

__all__ = [
    "AdaptiveMethod",
    "BlockAssignment",
    "ConstantMethod",
    "ControllerSettings",
    "ConvergencePoint",
    "ConvergenceTable",
    "HHParams",
    "RecursionMethod",
    "SDSParams",
    "SolverConfig",
    "StabilityFunctions",
    "StabilityVerdict",
    "StageSolveConfig",
    "SweepSpec",
    "TestSystemParams",
    "ToleranceSpec",
    "WorkPrecisionPoint",
    "tolerance_grid",
]
