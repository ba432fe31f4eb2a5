"""Partitioned systems x' = f(x, y, t), y' = g(x, y, t) and their bookkeeping."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from parthines.core.errors import DimensionError, EvaluationError, PreconditionError
from parthines.core.linalg import Structure, StructuredMatrix

logger = logging.getLogger(__name__)

BlockRhs = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True, eq=False)
class SplitState:
    t: float
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def from_stacked(cls, t: float, z: np.ndarray, nx: int) -> "SplitState":
        z = np.asarray(z, dtype=float)
        return cls(float(t), z[:nx].copy(), z[nx:].copy())

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y)))


@dataclass(frozen=True, eq=False)
class SemilinearData:
    """x' = A(y) x + b(y, t, x), y' = c(x, t, y) + D(x) y.

    The sources normally ignore their last (own-block) argument. Rows listed in
    ``x_coupled_rows`` / ``y_coupled_rows`` may read the *uncoupled* rows of their own
    block; those rows must belong to a diagonal matrix so a stage can be solved in two
    linear passes.
    """

    a_of_y: Callable[[np.ndarray], StructuredMatrix]
    b_of_yt: Callable[[np.ndarray, float, np.ndarray], np.ndarray]
    c_of_xt: Callable[[np.ndarray, float, np.ndarray], np.ndarray]
    d_of_x: Callable[[np.ndarray], StructuredMatrix]
    a_structure: Structure = "diagonal"
    d_structure: Structure = "diagonal"
    x_coupled_rows: tuple[int, ...] = ()
    y_coupled_rows: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.x_coupled_rows and self.a_structure != "diagonal":
            raise PreconditionError("coupled x rows require a diagonal A(y)")
        if self.y_coupled_rows and self.d_structure != "diagonal":
            raise PreconditionError("coupled y rows require a diagonal D(x)")

    def a_matrix(self, y: np.ndarray) -> StructuredMatrix:
        return self._checked(self.a_of_y(y), self.a_structure, "A(y)")

    def d_matrix(self, x: np.ndarray) -> StructuredMatrix:
        return self._checked(self.d_of_x(x), self.d_structure, "D(x)")

    @staticmethod
    def _checked(matrix: StructuredMatrix, declared: Structure, name: str) -> StructuredMatrix:
        if matrix.structure != declared:
            raise DimensionError(f"{name} returned {matrix.structure}, declared {declared}")
        return matrix

    def assembled_f(self, x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
        return self.a_matrix(y).matvec(x) + self.b_of_yt(y, t, x)

    def assembled_g(self, x: np.ndarray, y: np.ndarray, t: float) -> np.ndarray:
        return self.c_of_xt(x, t, y) + self.d_matrix(x).matvec(y)


@dataclass(frozen=True, eq=False)
class PartitionedSystem:
    name: str
    nx: int
    ny: int
    eval_f: BlockRhs
    eval_g: BlockRhs
    typical_size: np.ndarray
    semilinear: Optional[SemilinearData] = None
    # stacked (x, y) position of each component of the model's natural ordering
    canonical_index: Optional[np.ndarray] = None
    component_names: tuple[str, ...] = ()
    # (lower, upper) corners of the box consistency checks sample from
    sample_box: Optional[tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise DimensionError(f"nx = {self.nx} and ny = {self.ny} must both be >= 1")
        if self.typical_size.shape != (self.nx + self.ny,):
            raise DimensionError("typical_size must have nx + ny entries")
        if np.any(self.typical_size <= 0.0):
            raise PreconditionError("typical_size must be strictly positive")

    @classmethod
    def from_semilinear(
        cls,
        name: str,
        nx: int,
        ny: int,
        data: SemilinearData,
        typical_size: Optional[np.ndarray] = None,
        **extra: object,
    ) -> "PartitionedSystem":
        """Use the assembled semilinear forms as the right-hand side."""
        size = np.ones(nx + ny) if typical_size is None else np.asarray(typical_size, float)
        return cls(
            name=name,
            nx=nx,
            ny=ny,
            eval_f=data.assembled_f,
            eval_g=data.assembled_g,
            typical_size=size,
            semilinear=data,
            **extra,  # type: ignore[arg-type]
        )

    def check_state(self, state: SplitState) -> None:
        if state.x.shape != (self.nx,) or state.y.shape != (self.ny,):
            raise DimensionError(
                f"{self.name}: state has shapes {state.x.shape}, {state.y.shape}; "
                f"expected ({self.nx},), ({self.ny},)"
            )

    def to_canonical(self, z: np.ndarray) -> np.ndarray:
        return z if self.canonical_index is None else z[self.canonical_index]


@dataclass
class EvalCounter:
    """Effort bookkeeping in the unit of one combined (f, g) evaluation.

    ``fevals`` follows the fixed per-step convention; ``jacobian_evals`` counts the
    finite-difference Jacobians of the Newton path; ``overhead_fevals`` holds start-up
    work outside the per-step convention (the Hines bootstrap); ``newton_iterations``
    is diagnostic only.
    """

    fevals: float = 0.0
    jacobian_evals: int = 0
    steps_accepted: int = 0
    steps_rejected: int = 0
    overhead_fevals: float = 0.0
    newton_iterations: int = 0

    def charge(self, fevals: float) -> None:
        if fevals < 0:
            raise PreconditionError("effort charges must be non-negative")
        self.fevals += fevals

    @property
    def effort(self) -> float:
        return self.fevals + self.jacobian_evals + self.overhead_fevals


@dataclass
class RunRecord:
    system_name: str
    method: str
    counter: EvalCounter
    times: list[float] = field(default_factory=list)
    samples: list[np.ndarray] = field(default_factory=list)
    final_state: Optional[SplitState] = None
    failed: bool = False
    message: str = ""

    def record(self, state: SplitState) -> None:
        self.times.append(state.t)
        self.samples.append(state.stacked())


def ensure_finite(values: np.ndarray, block: str, t: float) -> np.ndarray:
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        index = int(bad[0])
        raise EvaluationError(block, index, float(values[index]), t)
    return values


def evaluate(
    system: PartitionedSystem, state: SplitState, counter: EvalCounter
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate (f, g) at a state and charge one function evaluation."""
    system.check_state(state)
    fx = ensure_finite(np.asarray(system.eval_f(state.x, state.y, state.t), float), "f", state.t)
    gy = ensure_finite(np.asarray(system.eval_g(state.x, state.y, state.t), float), "g", state.t)
    counter.charge(1.0)
    return fx, gy


def _relative_gap(direct: np.ndarray, assembled: np.ndarray, scale: np.ndarray) -> float:
    denominator = np.maximum.reduce([np.abs(direct), scale, np.ones_like(direct)])
    return float(np.max(np.abs(direct - assembled) / denominator))


def consistency_check(
    system: PartitionedSystem,
    trials: int,
    seed: int,
    box: Optional[tuple[Sequence[float], Sequence[float]]] = None,
) -> float:
    """Largest relative gap between (eval_f, eval_g) and the assembled semilinear forms.

    States are drawn uniformly from ``box`` (stacked coordinates), falling back to the
    system's ``sample_box`` and then to [-1, 1]. The gap of each component is measured
    against the size of the terms that produce it, |A||x| + |b| (resp. |c| + |D||y|),
    floored at one.
    """
    data = system.semilinear
    if data is None:
        raise PreconditionError(f"{system.name} has no semilinear data")
    n = system.nx + system.ny
    if box is None:
        box = system.sample_box or (-np.ones(n), np.ones(n))
    lower, upper = (np.asarray(corner, dtype=float) for corner in box)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        z = rng.uniform(lower, upper)
        t = float(rng.uniform(0.0, 1.0))
        x, y = z[: system.nx], z[system.nx :]
        a, d = data.a_matrix(y), data.d_matrix(x)
        b, c = data.b_of_yt(y, t, x), data.c_of_xt(x, t, y)
        worst = max(
            worst,
            _relative_gap(system.eval_f(x, y, t), a.matvec(x) + b, a.abs_matvec(x) + np.abs(b)),
            _relative_gap(system.eval_g(x, y, t), c + d.matvec(y), d.abs_matvec(y) + np.abs(c)),
        )
    logger.debug("consistency_check %s: %d trials, max gap %.3e", system.name, trials, worst)
    return worst
