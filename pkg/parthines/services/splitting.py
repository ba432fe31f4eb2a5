"""Peaceman-Rachford stepping and the exact Strang propagator of the linear test system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from parthines.core.errors import PreconditionError, StabilityDomainError
from parthines.core.system import EvalCounter, PartitionedSystem, SplitState, ensure_finite
from parthines.schemas.solver import StageSolveConfig
from parthines.schemas.stability import TestSystemParams
from parthines.services.solvers import (
    EXPLICIT_CHARGE,
    MIDPOINT_CHARGE,
    TRAPEZOID_CHARGE,
    implicit_x_stage,
    implicit_y_stage,
)


@dataclass(frozen=True, eq=False)
class PRStageValues:
    """Intermediate value U_{n+1/2}; after a full step y_half = (y_n + y_{n+1}) / 2."""

    x_half: np.ndarray
    y_half: np.ndarray


def pr_stages(
    system: PartitionedSystem,
    state: SplitState,
    h: float,
    cfg: StageSolveConfig,
    counter: EvalCounter,
) -> tuple[PRStageValues, SplitState]:
    """One Peaceman-Rachford step for F = (f, 0) + (0, g), returning the stage values too.

    (i) explicit half-step in x, (ii) backward-Euler half-step in y, (iii) forward-Euler
    half-step in y from the stage value, (iv) backward-Euler half-step in x.
    Charges 1 + 1 + 0 + 0.5, the same effort as the modified step.
    """
    if not h > 0.0:
        raise PreconditionError(f"step size must be positive, got {h!r}")
    system.check_state(state)
    t = state.t
    t_half = t + 0.5 * h

    fx = ensure_finite(np.asarray(system.eval_f(state.x, state.y, t), float), "f", t)
    counter.charge(EXPLICIT_CHARGE)
    x_half = state.x + 0.5 * h * fx

    y_half = implicit_y_stage(
        "pr_implicit_y", system, x_half, state.y, t_half, 0.5 * h, 1.0, state.y, cfg, counter
    )
    counter.charge(MIDPOINT_CHARGE)

    # the stage value g(x_half, y_half) is already paid for by the implicit half-step
    gy = ensure_finite(np.asarray(system.eval_g(x_half, y_half, t_half), float), "g", t_half)
    y_new = y_half + 0.5 * h * gy

    x_new = implicit_x_stage(
        "pr_implicit_x", system, y_new, x_half, t + h, 0.5 * h, 1.0, x_half, cfg, counter
    )
    counter.charge(TRAPEZOID_CHARGE)
    return PRStageValues(x_half, y_half), SplitState(t + h, x_new, y_new)


def pr_step(
    system: PartitionedSystem,
    state: SplitState,
    h: float,
    cfg: StageSolveConfig,
    counter: EvalCounter,
) -> SplitState:
    return pr_stages(system, state, h, cfg, counter)[1]


def strang_linear_propagator(params: TestSystemParams, h: float) -> np.ndarray:
    """C_Strang for x' = mu x + a y, y' = b x + lambda y with exact sub-flows.

    Half a step of x' = mu x + a y (y frozen), a full step of y' = b x + lambda y
    (x frozen), then another half step in x.
    """
    if not h > 0.0:
        raise PreconditionError(f"step size must be positive, got {h!r}")
    mu, lam, a, b = params.mu, params.lam, params.a, params.b
    if mu == 0.0 or lam == 0.0:
        raise StabilityDomainError("mu and lambda must be non-zero")
    alpha = np.exp(mu * h)
    beta = np.exp(lam * h)
    root_alpha = np.exp(0.5 * mu * h)
    t_term = params.gamma * (root_alpha - 1.0) * (beta - 1.0)
    return np.array(
        [
            [
                alpha + root_alpha * t_term,
                a / mu * (root_alpha - 1.0) * (root_alpha + t_term + beta),
            ],
            [b / lam * root_alpha * (beta - 1.0), t_term + beta],
        ]
    )


def strang_substeps(params: TestSystemParams, h: float) -> np.ndarray:
    """The same propagator, composed from the three sub-flow exponentials."""
    half_x = scipy.linalg.expm(0.5 * h * np.array([[params.mu, params.a], [0.0, 0.0]]))
    full_y = scipy.linalg.expm(h * np.array([[0.0, 0.0], [params.b, params.lam]]))
    return half_x @ full_y @ half_x
