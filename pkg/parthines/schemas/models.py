from enum import Enum
from pydantic import BaseModel, ConfigDict, Field, field_validator


class BlockAssignment(str, Enum):
    """Which physical group plays the role of x."""

    VOLTAGES_AS_X = "voltages_as_x"
    GATES_AS_X = "gates_as_x"


class HHParams(BaseModel):
    """Hodgkin-Huxley space-clamped axon, in the 1952 sign convention."""

    model_config = ConfigDict(extra="forbid")

    c_m: float = Field(default=1.0, gt=0.0)
    i_ext: float = 14.2
    g_k: float = 36.0
    g_na: float = 120.0
    g_l: float = 0.3
    v_k: float = 12.0
    v_na: float = -115.0
    v_l: float = -10.599

    v_init: float = -4.5
    m_init: float = 0.085
    n_init: float = 0.5
    h_init: float = 0.38
    t_end: float = Field(default=20.0, gt=0.0)


class SDSParams(BaseModel):
    """Soma-dendrite-spine compartment model, SI units."""

    model_config = ConfigDict(extra="forbid")

    c_1: float = Field(default=3.6e-11, gt=0.0)
    c_2: float = Field(default=2e-11, gt=0.0)
    c_3: float = Field(default=9.6e-15, gt=0.0)
    r_m1: float = Field(default=8.333e8, gt=0.0)
    r_m2: float = Field(default=1.5e9, gt=0.0)
    r_m3: float = Field(default=3.125e12, gt=0.0)
    r_a2: float = Field(default=5e8, gt=0.0)
    r_a3: float = Field(default=3e7, gt=0.0)
    v_na: float = 0.045
    v_k: float = -0.085
    v_ca: float = 0.07
    v_l: float = -0.0594
    g_na: float = 5.4e-7
    g_k: float = 5.4e-8
    g_ca: float = 9.6e-13
    g_kca: float = 7.68e-12
    i_ext: float = 0.09e-9
    tau: float = Field(default=0.1, gt=0.0)
    b_ca: float = 4.51389e12
    # -1: dP/dt = alpha (1 - P) - beta P;  +1: dP/dt = alpha (1 - P) + beta P
    gate_sign: int = -1

    v1_init: float = 0.07
    v2_init: float = 0.06
    v3_init: float = 0.06
    ca_init: float = 1.6e-4
    n_init: float = 0.8
    m_init: float = 1.0
    h_init: float = 0.3
    r_init: float = 1.0
    s_init: float = 0.11
    t_end: float = Field(default=0.1, gt=0.0)

    @field_validator("gate_sign")
    @classmethod
    def _unit_sign(cls, v: int) -> int:
        if v not in (-1, 1):
            raise ValueError("gate_sign must be -1 or 1")
        return v
