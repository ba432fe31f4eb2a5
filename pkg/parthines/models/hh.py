"""Space-clamped Hodgkin-Huxley axon: one voltage, gates (m, n, h)."""

from __future__ import annotations

from typing import Optional

import numpy as np

from parthines.core.linalg import StructuredMatrix
from parthines.core.system import PartitionedSystem
from parthines.models import rates
from parthines.models.assembly import TwoGroupModel, assemble
from parthines.schemas.models import BlockAssignment, HHParams

GATES = ("m", "n", "h")


def _gate_rates(v: float) -> tuple[np.ndarray, np.ndarray]:
    alpha = np.array([rates.hh_alpha_m(v), rates.hh_alpha_n(v), rates.hh_alpha_h(v)])
    beta = np.array([rates.hh_beta_m(v), rates.hh_beta_n(v), rates.hh_beta_h(v)])
    return alpha, beta


def hh_model(params: HHParams) -> TwoGroupModel:
    p = params

    def conductances(gates: np.ndarray) -> tuple[float, float]:
        m, n, h = gates
        return p.g_k * n**4, p.g_na * m**3 * h

    def volt_matrix(gates: np.ndarray) -> StructuredMatrix:
        g_k, g_na = conductances(gates)
        return StructuredMatrix.diagonal(np.array([-(g_k + g_na + p.g_l) / p.c_m]))

    def volt_source(gates: np.ndarray, t: float) -> np.ndarray:
        g_k, g_na = conductances(gates)
        return np.array([(p.i_ext + g_k * p.v_k + g_na * p.v_na + p.g_l * p.v_l) / p.c_m])

    def gate_matrix(volts: np.ndarray) -> StructuredMatrix:
        alpha, beta = _gate_rates(float(volts[0]))
        return StructuredMatrix.diagonal(-(alpha + beta))

    def gate_source(volts: np.ndarray, t: float, gates: np.ndarray) -> np.ndarray:
        return _gate_rates(float(volts[0]))[0]

    def direct_volt(volts: np.ndarray, gates: np.ndarray, t: float) -> np.ndarray:
        v = float(volts[0])
        m, n, h = gates
        current = (
            p.i_ext
            - p.g_k * n**4 * (v - p.v_k)
            - p.g_na * m**3 * h * (v - p.v_na)
            - p.g_l * (v - p.v_l)
        )
        return np.array([current / p.c_m])

    def direct_gate(volts: np.ndarray, gates: np.ndarray, t: float) -> np.ndarray:
        alpha, beta = _gate_rates(float(volts[0]))
        return alpha * (1.0 - gates) - beta * gates

    return TwoGroupModel(
        name="hh",
        volt_names=("V",),
        gate_names=GATES,
        volt_matrix=volt_matrix,
        volt_structure="diagonal",
        volt_source=volt_source,
        gate_matrix=gate_matrix,
        gate_source=gate_source,
        gate_coupled_rows=(),
        direct_volt=direct_volt,
        direct_gate=direct_gate,
        typical_size=np.array([100.0, 1.0, 1.0, 1.0]),
        sample_box=(np.array([-120.0, 0.0, 0.0, 0.0]), np.array([20.0, 1.0, 1.0, 1.0])),
    )


def build_hh(
    params: Optional[HHParams] = None,
    assign: BlockAssignment = BlockAssignment.VOLTAGES_AS_X,
) -> PartitionedSystem:
    """Voltages-as-x: A(y) = -(g_K n^4 + g_Na m^3 h + g_L) / C, diagonal gate block."""
    return assemble(hh_model(params or HHParams()), assign)


def hh_initial_natural(params: HHParams) -> tuple[np.ndarray, np.ndarray]:
    return np.array([params.v_init]), np.array([params.m_init, params.n_init, params.h_init])
