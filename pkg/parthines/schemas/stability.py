from typing import ClassVar, Literal

from pydantic import BaseModel, Field, model_validator

RecursionMethod = Literal["modified", "hines", "strang"]


class TestSystemParams(BaseModel):
    """x' = mu x + a y, y' = b x + lambda y."""

    __test__: ClassVar[bool] = False  # keeps pytest from collecting it

    mu: float
    lam: float = Field(alias="lambda")
    a: float = 0.0
    b: float = 0.0

    model_config = {"populate_by_name": True}

    @model_validator(mode="after")
    def _nonzero_rates(self) -> "TestSystemParams":
        if self.mu == 0.0 or self.lam == 0.0:
            raise ValueError("mu and lambda must be non-zero")
        return self

    @property
    def gamma(self) -> float:
        return self.a * self.b / (self.mu * self.lam)

    @property
    def is_admissible(self) -> bool:
        """mu, lambda < 0 and ab < mu*lambda (which forces gamma < 1)."""
        return self.mu < 0.0 and self.lam < 0.0 and self.a * self.b < self.mu * self.lam


class StabilityFunctions(BaseModel):
    alpha: float
    beta: float
    flavor: Literal["discrete", "strang"]


class StabilityVerdict(BaseModel):
    method: RecursionMethod
    h: float
    alpha: float
    beta: float
    gamma: float
    stable: bool
    margin: float
    spectral_radius: float
