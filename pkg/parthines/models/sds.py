"""Three-compartment neuron (soma, dendrite, spine) with spine calcium.

Natural order: voltages (V1, V2, V3), then the gate/chemistry block
(n, m, h, r, s, c_Ca). n, m, h sit on the soma, r and s on the spine. The calcium
influx g_Ca s^2 r B (V_Ca - V3) reads the gates s, r of its own block, so c_Ca is a
coupled row.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from parthines.core.linalg import StructuredMatrix
from parthines.core.system import PartitionedSystem
from parthines.models import rates
from parthines.models.assembly import TwoGroupModel, assemble
from parthines.schemas.models import BlockAssignment, SDSParams

VOLTS = ("V1", "V2", "V3")
GATES = ("n", "m", "h", "r", "s", "c_Ca")
N, M, H, R, S, CA = range(6)


def _gate_rates(volts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v1, v3 = float(volts[0]), float(volts[2])
    alpha = np.array(
        [
            rates.sds_alpha_n(v1),
            rates.sds_alpha_m(v1),
            rates.sds_alpha_h(v1),
            rates.sds_alpha_r(v3),
            rates.sds_alpha_s(v3),
        ]
    )
    beta = np.array(
        [
            rates.sds_beta_n(v1),
            rates.sds_beta_m(v1),
            rates.sds_beta_h(v1),
            rates.sds_beta_r(v3),
            rates.sds_beta_s(v3),
        ]
    )
    return alpha, beta


def sds_model(params: SDSParams) -> TwoGroupModel:
    p = params
    cap = np.array([p.c_1, p.c_2, p.c_3])
    # axial conductances between compartments 1-2 and 2-3
    g_12, g_23 = 1.0 / p.r_a2, 1.0 / p.r_a3
    leak = np.array([1.0 / p.r_m1, 1.0 / p.r_m2, 1.0 / p.r_m3])

    def channel_conductances(gates: np.ndarray) -> np.ndarray:
        """Per-compartment conductances (K, Na on V1; Ca, KCa on V3)."""
        return np.array(
            [
                p.g_k * gates[N] ** 4,
                p.g_na * gates[M] ** 3 * gates[H],
                p.g_ca * gates[S] ** 2 * gates[R],
                p.g_kca * gates[CA],
            ]
        )

    def volt_matrix(gates: np.ndarray) -> StructuredMatrix:
        g_k, g_na, g_ca, g_kca = channel_conductances(gates)
        main = -np.array(
            [
                g_k + g_na + g_12 + leak[0],
                g_12 + g_23 + leak[1],
                g_ca + g_kca + g_23 + leak[2],
            ]
        )
        upper = np.array([g_12, g_23]) / cap[:2]
        lower = np.array([g_12, g_23]) / cap[1:]
        return StructuredMatrix.tridiagonal(lower, main / cap, upper)

    def volt_source(gates: np.ndarray, t: float) -> np.ndarray:
        g_k, g_na, g_ca, g_kca = channel_conductances(gates)
        currents = np.array(
            [
                p.i_ext + g_k * p.v_k + g_na * p.v_na,
                0.0,
                g_ca * p.v_ca + g_kca * p.v_k,
            ]
        )
        return (currents + leak * p.v_l) / cap

    def gate_matrix(volts: np.ndarray) -> StructuredMatrix:
        alpha, beta = _gate_rates(volts)
        # gate_sign -1: -(alpha + beta); +1: beta - alpha
        return StructuredMatrix.diagonal(np.append(p.gate_sign * beta - alpha, -1.0 / p.tau))

    def gate_source(volts: np.ndarray, t: float, gates: np.ndarray) -> np.ndarray:
        alpha, _ = _gate_rates(volts)
        influx = p.g_ca * gates[S] ** 2 * gates[R] * p.b_ca * (p.v_ca - float(volts[2]))
        return np.append(alpha, influx)

    def direct_volt(volts: np.ndarray, gates: np.ndarray, t: float) -> np.ndarray:
        v1, v2, v3 = volts
        n, m, h, r, s, ca = gates
        dv1 = (
            p.i_ext
            - p.g_k * n**4 * (v1 - p.v_k)
            - p.g_na * m**3 * h * (v1 - p.v_na)
            + (v2 - v1) / p.r_a2
            - (v1 - p.v_l) / p.r_m1
        )
        dv2 = (v1 - v2) / p.r_a2 + (v3 - v2) / p.r_a3 - (v2 - p.v_l) / p.r_m2
        dv3 = (
            -p.g_ca * s**2 * r * (v3 - p.v_ca)
            - p.g_kca * ca * (v3 - p.v_k)
            + (v2 - v3) / p.r_a3
            - (v3 - p.v_l) / p.r_m3
        )
        return np.array([dv1, dv2, dv3]) / cap

    def direct_gate(volts: np.ndarray, gates: np.ndarray, t: float) -> np.ndarray:
        alpha, beta = _gate_rates(volts)
        channel = gates[:CA]
        d_gates = alpha * (1.0 - channel) + p.gate_sign * beta * channel
        n, m, h, r, s, ca = gates
        d_ca = p.g_ca * s**2 * r * p.b_ca * (p.v_ca - float(volts[2])) - ca / p.tau
        return np.append(d_gates, d_ca)

    return TwoGroupModel(
        name="sds",
        volt_names=VOLTS,
        gate_names=GATES,
        volt_matrix=volt_matrix,
        volt_structure="tridiagonal",
        volt_source=volt_source,
        gate_matrix=gate_matrix,
        gate_source=gate_source,
        gate_coupled_rows=(CA,),
        direct_volt=direct_volt,
        direct_gate=direct_gate,
        typical_size=np.array([0.1, 0.1, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0, 1e-4]),
        sample_box=(
            np.array([-0.1, -0.1, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
            np.array([0.08, 0.08, 0.08, 1.0, 1.0, 1.0, 1.0, 1.0, 1e-3]),
        ),
    )


def build_sds(
    params: Optional[SDSParams] = None,
    assign: BlockAssignment = BlockAssignment.VOLTAGES_AS_X,
) -> PartitionedSystem:
    """Tridiagonal voltage coupling through 1/R_a2 and 1/R_a3; diagonal gate block."""
    return assemble(sds_model(params or SDSParams()), assign)


def sds_initial_natural(params: SDSParams) -> tuple[np.ndarray, np.ndarray]:
    volts = np.array([params.v1_init, params.v2_init, params.v3_init])
    gates = np.array(
        [
            params.n_init,
            params.m_init,
            params.h_init,
            params.r_init,
            params.s_init,
            params.ca_init,
        ]
    )
    return volts, gates
