"""Exception hierarchy shared by every layer.

Each error carries an upper-case ``detail`` code (stable, machine readable) and a
human readable message. The CLI maps ``exit_code`` straight to the process status.
"""

from __future__ import annotations

from typing import Optional


class ParthinesError(Exception):
    exit_code = 2

    def __init__(self, detail: str, message: Optional[str] = None) -> None:
        self.detail = detail
        self.message = message or detail
        super().__init__(f"{detail}: {self.message}")


class UsageError(ParthinesError):
    exit_code = 1

    def __init__(self, message: str) -> None:
        super().__init__("USAGE", message)


class DimensionError(ParthinesError):
    def __init__(self, message: str) -> None:
        super().__init__("STATE_DIMENSION_MISMATCH", message)


class EvaluationError(ParthinesError):
    """A right-hand side produced a non-finite value."""

    def __init__(self, block: str, component: int, value: float, t: float) -> None:
        self.block = block
        self.component = component
        self.t = t
        super().__init__(
            "EVALUATION_NOT_FINITE",
            f"{block}[{component}] = {value!r} at t = {t!r}",
        )


class StepFailureError(ParthinesError):
    """An implicit stage could not be solved; the caller may retry with a smaller h."""

    def __init__(self, stage: str, message: str) -> None:
        self.stage = stage
        super().__init__("STAGE_SOLVE_FAILED", f"stage '{stage}': {message}")


class StepSizeUnderflowError(ParthinesError):
    def __init__(self, t: float, h: float) -> None:
        self.t = t
        self.h = h
        super().__init__("STEP_SIZE_UNDERFLOW", f"step size {h!r} below minimum at t = {t!r}")


class StabilityDomainError(ParthinesError):
    def __init__(self, message: str) -> None:
        super().__init__("STABILITY_DOMAIN", message)


class PreconditionError(ParthinesError):
    def __init__(self, message: str) -> None:
        super().__init__("PRECONDITION_FAILED", message)


class ReferenceFailureError(ParthinesError):
    def __init__(self, model: str, disagreement: float, threshold: float) -> None:
        self.disagreement = disagreement
        super().__init__(
            "REFERENCE_NOT_CERTIFIED",
            f"{model}: reference paths disagree by {disagreement:.3e} (limit {threshold:.1e})",
        )


class ModelConfigError(ParthinesError):
    exit_code = 1

    def __init__(self, message: str) -> None:
        super().__init__("MODEL_CONFIG_INVALID", message)
