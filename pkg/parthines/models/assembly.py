"""Turn a two-group neuron model (voltages, gates) into a partitioned system.

Either group can play the role of x; the other becomes y. The voltage group is
linear in the voltages given the gates, the gate group is linear in the gates given
the voltages, so both assignments are semilinear.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from parthines.core.linalg import Structure, StructuredMatrix
from parthines.core.system import PartitionedSystem, SemilinearData
from parthines.schemas.models import BlockAssignment

Vector = np.ndarray


@dataclass(frozen=True, eq=False)
class TwoGroupModel:
    """dV/dt = M_v(G) V + s_v(G, t),  dG/dt = s_g(V, t, G) + M_g(V) G.

    ``gate_source`` may read gate rows other than ``gate_coupled_rows``.
    ``direct_volt`` / ``direct_gate`` evaluate the right-hand sides straight from
    the model equations and serve as the system's f and g.
    """

    name: str
    volt_names: tuple[str, ...]
    gate_names: tuple[str, ...]
    volt_matrix: Callable[[Vector], StructuredMatrix]
    volt_structure: Structure
    volt_source: Callable[[Vector, float], Vector]
    gate_matrix: Callable[[Vector], StructuredMatrix]
    gate_source: Callable[[Vector, float, Vector], Vector]
    gate_coupled_rows: tuple[int, ...]
    direct_volt: Callable[[Vector, Vector, float], Vector]
    direct_gate: Callable[[Vector, Vector, float], Vector]
    typical_size: Vector  # natural order: voltages, then gates
    sample_box: tuple[Vector, Vector]

    @property
    def n_volt(self) -> int:
        return len(self.volt_names)

    @property
    def n_gate(self) -> int:
        return len(self.gate_names)


def natural_to_stacked(assignment: BlockAssignment, n_volt: int, n_gate: int) -> np.ndarray:
    """Permutation p with z_stacked = z_natural[p]."""
    volts, gates = np.arange(n_volt), np.arange(n_volt, n_volt + n_gate)
    if assignment == BlockAssignment.VOLTAGES_AS_X:
        return np.concatenate([volts, gates])
    return np.concatenate([gates, volts])


def split_natural(
    assignment: BlockAssignment, volts: Vector, gates: Vector
) -> tuple[Vector, Vector]:
    """(x, y) for the given assignment."""
    if assignment == BlockAssignment.VOLTAGES_AS_X:
        return np.asarray(volts, float), np.asarray(gates, float)
    return np.asarray(gates, float), np.asarray(volts, float)


def assemble(model: TwoGroupModel, assignment: BlockAssignment) -> PartitionedSystem:
    to_stacked = natural_to_stacked(assignment, model.n_volt, model.n_gate)
    # inverse permutation: z_natural = z_stacked[canonical]
    canonical = np.argsort(to_stacked)
    lower, upper = model.sample_box
    box = (np.asarray(lower, float)[to_stacked], np.asarray(upper, float)[to_stacked])
    names = model.volt_names + model.gate_names
    common = dict(
        typical_size=np.asarray(model.typical_size, float)[to_stacked],
        canonical_index=canonical,
        component_names=tuple(names[int(i)] for i in to_stacked),
        sample_box=box,
    )
    name = f"{model.name}[{assignment.value}]"

    if assignment == BlockAssignment.VOLTAGES_AS_X:
        data = SemilinearData(
            a_of_y=model.volt_matrix,
            b_of_yt=lambda y, t, x: model.volt_source(y, t),
            c_of_xt=model.gate_source,
            d_of_x=model.gate_matrix,
            a_structure=model.volt_structure,
            d_structure="diagonal",
            y_coupled_rows=model.gate_coupled_rows,
        )
        return PartitionedSystem(
            name=name,
            nx=model.n_volt,
            ny=model.n_gate,
            eval_f=model.direct_volt,
            eval_g=model.direct_gate,
            semilinear=data,
            **common,  # type: ignore[arg-type]
        )

    data = SemilinearData(
        a_of_y=model.gate_matrix,
        b_of_yt=model.gate_source,
        c_of_xt=lambda x, t, y: model.volt_source(x, t),
        d_of_x=model.volt_matrix,
        a_structure="diagonal",
        d_structure=model.volt_structure,
        x_coupled_rows=model.gate_coupled_rows,
    )
    return PartitionedSystem(
        name=name,
        nx=model.n_gate,
        ny=model.n_volt,
        eval_f=lambda x, y, t: model.direct_gate(y, x, t),
        eval_g=lambda x, y, t: model.direct_volt(y, x, t),
        semilinear=data,
        **common,  # type: ignore[arg-type]
    )
