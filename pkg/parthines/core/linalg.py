"""Structured matrices for the implicit stages.

The structure is declared by the model, never detected. Storage:

* ``diagonal``    -- 1-D array of the n diagonal entries.
* ``tridiagonal`` -- (3, n) array in LAPACK banded layout: row 0 is the upper diagonal
  (``data[0, 1:]``), row 1 the main diagonal, row 2 the lower diagonal (``data[2, :-1]``).
* ``dense``       -- (n, n) array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from parthines.core.errors import DimensionError

Structure = Literal["diagonal", "tridiagonal", "dense"]


class SingularStageMatrix(ArithmeticError):
    """Raised when I - s*M has an exactly vanishing pivot."""


@dataclass(frozen=True, eq=False)
class StructuredMatrix:
    structure: Structure
    data: np.ndarray

    @property
    def size(self) -> int:
        return int(self.data.shape[-1])

    # ------------------------------------------------------------------ Builders
    @classmethod
    def diagonal(cls, entries: np.ndarray) -> "StructuredMatrix":
        return cls("diagonal", np.asarray(entries, dtype=float).reshape(-1))

    @classmethod
    def tridiagonal(
        cls, lower: np.ndarray, main: np.ndarray, upper: np.ndarray
    ) -> "StructuredMatrix":
        """Build from the sub-, main and super-diagonals (lengths n-1, n, n-1)."""
        main = np.asarray(main, dtype=float)
        n = main.shape[0]
        band = np.zeros((3, n))
        band[0, 1:] = upper
        band[1, :] = main
        band[2, :-1] = lower
        return cls("tridiagonal", band)

    @classmethod
    def from_dense(cls, structure: Structure, matrix: np.ndarray) -> "StructuredMatrix":
        """Compress a dense matrix, rejecting entries outside the declared pattern."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {matrix.shape}")
        if structure == "dense":
            return cls("dense", matrix.copy())
        n = matrix.shape[0]
        offsets = np.subtract.outer(np.arange(n), np.arange(n))
        allowed = offsets == 0 if structure == "diagonal" else np.abs(offsets) <= 1
        if np.any(matrix[~allowed] != 0.0):
            raise DimensionError(f"matrix has entries outside the {structure} pattern")
        if structure == "diagonal":
            return cls.diagonal(np.diag(matrix))
        return cls.tridiagonal(np.diag(matrix, -1), np.diag(matrix), np.diag(matrix, 1))

    # ------------------------------------------------------------------ Views
    def to_dense(self) -> np.ndarray:
        if self.structure == "diagonal":
            return np.diag(self.data)
        if self.structure == "tridiagonal":
            return (
                np.diag(self.data[1])
                + np.diag(self.data[0, 1:], 1)
                + np.diag(self.data[2, :-1], -1)
            )
        return self.data.copy()

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.structure == "diagonal":
            return self.data * v
        if self.structure == "tridiagonal":
            out = self.data[1] * v
            out[:-1] += self.data[0, 1:] * v[1:]
            out[1:] += self.data[2, :-1] * v[:-1]
            return out
        return self.data @ v

    def abs_matvec(self, v: np.ndarray) -> np.ndarray:
        """|M| |v|, the magnitude scale of the product M v."""
        return StructuredMatrix(self.structure, np.abs(self.data)).matvec(np.abs(v))

    # ------------------------------------------------------------------ Solves
    def solve_shifted(self, scale: float, rhs: np.ndarray) -> np.ndarray:
        """Solve (I - scale * M) z = rhs using the declared structure."""
        if rhs.shape[0] != self.size:
            raise DimensionError(f"rhs has length {rhs.shape[0]}, matrix size {self.size}")
        if self.structure == "diagonal":
            pivots = 1.0 - scale * self.data
            if np.any(pivots == 0.0):
                index = int(np.flatnonzero(pivots == 0.0)[0])
                raise SingularStageMatrix(f"zero pivot in diagonal row {index}")
            return rhs / pivots
        if self.structure == "tridiagonal":
            band = -scale * self.data
            band[1] += 1.0
            return solve_banded_tridiagonal(band, rhs)
        shifted = np.eye(self.size) - scale * self.data
        lu, piv = scipy.linalg.lu_factor(shifted, check_finite=True)
        if np.any(np.diag(lu) == 0.0):
            raise SingularStageMatrix("exactly singular dense stage matrix")
        return scipy.linalg.lu_solve((lu, piv), rhs)


def solve_banded_tridiagonal(band: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve with a (3, n) banded matrix in the layout above (LAPACK gbsv)."""
    try:
        return scipy.linalg.solve_banded((1, 1), band, rhs, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SingularStageMatrix(f"singular tridiagonal stage matrix: {exc}") from exc


def solve_tridiagonal(
    lower: np.ndarray, main: np.ndarray, upper: np.ndarray, rhs: np.ndarray
) -> np.ndarray:
    """Solve the system with sub-, main and super-diagonals (lengths n-1, n, n-1)."""
    return solve_banded_tridiagonal(StructuredMatrix.tridiagonal(lower, main, upper).data, rhs)
