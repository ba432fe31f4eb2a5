"""Constant-coefficient linear systems and their exact flows."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from parthines.core.errors import DimensionError
from parthines.core.linalg import StructuredMatrix
from parthines.core.system import PartitionedSystem, SemilinearData, SplitState
from parthines.schemas.stability import TestSystemParams


def linear_block_system(
    matrix: np.ndarray, nx: int, name: str = "linear", typical_size: float = 1.0
) -> PartitionedSystem:
    """z' = M z split after the first nx components; A, D are the dense diagonal blocks."""
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    if matrix.shape != (n, n) or not 0 < nx < n:
        raise DimensionError(f"need a square matrix and 0 < nx < n, got {matrix.shape}, {nx}")
    m_xx, m_xy = matrix[:nx, :nx], matrix[:nx, nx:]
    m_yx, m_yy = matrix[nx:, :nx], matrix[nx:, nx:]
    a_block = StructuredMatrix.from_dense("dense", m_xx)
    d_block = StructuredMatrix.from_dense("dense", m_yy)
    data = SemilinearData(
        a_of_y=lambda y: a_block,
        b_of_yt=lambda y, t, x: m_xy @ y,
        c_of_xt=lambda x, t, y: m_yx @ x,
        d_of_x=lambda x: d_block,
        a_structure="dense",
        d_structure="dense",
    )
    return PartitionedSystem(
        name=name,
        nx=nx,
        ny=n - nx,
        eval_f=lambda x, y, t: m_xx @ x + m_xy @ y,
        eval_g=lambda x, y, t: m_yx @ x + m_yy @ y,
        typical_size=np.full(n, typical_size),
        semilinear=data,
    )


def coupling_matrix(params: TestSystemParams) -> np.ndarray:
    return np.array([[params.mu, params.a], [params.b, params.lam]])


def linear_test_system(params: TestSystemParams) -> PartitionedSystem:
    """x' = mu x + a y, y' = b x + lambda y."""
    return linear_block_system(coupling_matrix(params), 1, name="test")


def exact_flow(matrix: np.ndarray, state: SplitState, t_end: float) -> SplitState:
    """expm((t_end - t) M) z."""
    z = scipy.linalg.expm((t_end - state.t) * np.asarray(matrix, float)) @ state.stacked()
    return SplitState.from_stacked(t_end, z, state.x.shape[0])
