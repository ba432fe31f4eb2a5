"""Constant-step steppers: Hines' staggered method and its one-step modification.

Effort convention (one unit = one combined f/g evaluation):

* modified step: explicit half-step 1, midpoint stage 1, trapezoid stage 0.5 -> 2.5
* Hines step: x stage 1, y stage 1 -> 2

The charges are fixed per stage, independent of Newton iteration counts; Newton work
shows up in ``jacobian_evals`` / ``newton_iterations`` only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.optimize

from parthines.core.errors import PreconditionError, StepFailureError
from parthines.core.linalg import SingularStageMatrix, StructuredMatrix
from parthines.core.system import (
    EvalCounter,
    PartitionedSystem,
    RunRecord,
    SplitState,
    ensure_finite,
)
from parthines.schemas.solver import ConstantMethod, SolverConfig, StageSolveConfig

logger = logging.getLogger(__name__)

Vector = np.ndarray
StageRhs = Callable[[Vector], Vector]

MIDPOINT_CHARGE = 1.0
TRAPEZOID_CHARGE = 0.5
EXPLICIT_CHARGE = 1.0
HINES_STAGE_CHARGE = 1.0


@dataclass(frozen=True, eq=False)
class StaggeredState:
    """x at t_n, y at t_n + h/2."""

    t_n: float
    x_n: Vector
    y_half: Vector


# ---------------------------------------------------------------- Stage kernels
def _linear_stage(
    stage: str,
    matrix: StructuredMatrix,
    source: StageRhs,
    coupled_rows: tuple[int, ...],
    base: Vector,
    scale: float,
    theta: float,
    anchor: Vector,
) -> Vector:
    """Solve u = base + scale * (M w + v(w)), w = theta u + (1 - theta) anchor.

    Rows whose source reads the own block are finished by a second pass once the rows
    they read are known.
    """
    rhs_fixed = base + scale * (1.0 - theta) * matrix.matvec(anchor)
    try:
        u = matrix.solve_shifted(scale * theta, rhs_fixed + scale * source(anchor))
        if coupled_rows:
            w = theta * u + (1.0 - theta) * anchor
            u = matrix.solve_shifted(scale * theta, rhs_fixed + scale * source(w))
    except SingularStageMatrix as exc:
        raise StepFailureError(stage, str(exc)) from exc
    if not np.all(np.isfinite(u)):
        raise StepFailureError(stage, "non-finite stage solution")
    return u


def _newton_stage(
    stage: str,
    rhs: StageRhs,
    base: Vector,
    scale: float,
    theta: float,
    anchor: Vector,
    cfg: StageSolveConfig,
    counter: EvalCounter,
) -> Vector:
    """Newton iteration on u - base - scale * F(theta u + (1 - theta) anchor) = 0.

    The Jacobian is a forward-difference approximation, refreshed every iteration.
    """
    u = np.array(anchor if theta < 1.0 else base, dtype=float)
    identity = np.eye(u.shape[0])
    for _ in range(cfg.newton_max_iter):
        w = theta * u + (1.0 - theta) * anchor
        fw = np.asarray(rhs(w), dtype=float)
        residual = u - base - scale * fw
        if not np.all(np.isfinite(residual)):
            raise StepFailureError(stage, "non-finite Newton residual")
        if np.max(np.abs(residual)) <= cfg.newton_tol * (1.0 + np.max(np.abs(u))):
            return u
        epsilon = np.sqrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(w))
        jac = np.atleast_2d(scipy.optimize.approx_fprime(w, rhs, epsilon))
        counter.jacobian_evals += 1
        try:
            du = scipy.linalg.solve(identity - scale * theta * jac, -residual)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise StepFailureError(stage, f"singular Newton matrix: {exc}") from exc
        u = u + du
        counter.newton_iterations += 1
    logger.debug("stage %s: Newton stalled at residual %.3e", stage, np.max(np.abs(residual)))
    raise StepFailureError(stage, f"Newton did not converge in {cfg.newton_max_iter} iterations")


def implicit_y_stage(
    stage: str,
    system: PartitionedSystem,
    x_frozen: Vector,
    base: Vector,
    t_eval: float,
    scale: float,
    theta: float,
    anchor: Vector,
    cfg: StageSolveConfig,
    counter: EvalCounter,
) -> Vector:
    """Solve u = base + scale * g(x_frozen, theta u + (1 - theta) anchor, t_eval) for u."""
    data = system.semilinear
    if data is not None and cfg.use_semilinear_fastpath:
        return _linear_stage(
            stage,
            data.d_matrix(x_frozen),
            lambda w: data.c_of_xt(x_frozen, t_eval, w),
            data.y_coupled_rows,
            base,
            scale,
            theta,
            anchor,
        )
    return _newton_stage(
        stage,
        lambda w: system.eval_g(x_frozen, w, t_eval),
        base,
        scale,
        theta,
        anchor,
        cfg,
        counter,
    )


def implicit_x_stage(
    stage: str,
    system: PartitionedSystem,
    y_frozen: Vector,
    base: Vector,
    t_eval: float,
    scale: float,
    theta: float,
    anchor: Vector,
    cfg: StageSolveConfig,
    counter: EvalCounter,
) -> Vector:
    """x-block counterpart of implicit_y_stage, with y frozen."""
    data = system.semilinear
    if data is not None and cfg.use_semilinear_fastpath:
        return _linear_stage(
            stage,
            data.a_matrix(y_frozen),
            lambda w: data.b_of_yt(y_frozen, t_eval, w),
            data.x_coupled_rows,
            base,
            scale,
            theta,
            anchor,
        )
    return _newton_stage(
        stage,
        lambda w: system.eval_f(w, y_frozen, t_eval),
        base,
        scale,
        theta,
        anchor,
        cfg,
        counter,
    )


# ---------------------------------------------------------------- Public stages
def solve_midpoint_stage(
    system: PartitionedSystem,
    x_half: Vector,
    y_n: Vector,
    t_half: float,
    h: float,
    cfg: StageSolveConfig,
    counter: EvalCounter,
) -> Vector:
    """y_new = y_n + h g(x_half, (y_new + y_n)/2, t_half)."""
    y_new = implicit_y_stage("midpoint", system, x_half, y_n, t_half, h, 0.5, y_n, cfg, counter)
    counter.charge(MIDPOINT_CHARGE)
    return y_new


def solve_trapezoid_stage(
    system: PartitionedSystem,
    x_half: Vector,
    y_new: Vector,
    t_new: float,
    h: float,
    cfg: StageSolveConfig,
    counter: EvalCounter,
) -> Vector:
    """x_new = x_half + (h/2) f(x_new, y_new, t_new)."""
    x_new = implicit_x_stage(
        "trapezoid", system, y_new, x_half, t_new, 0.5 * h, 1.0, x_half, cfg, counter
    )
    counter.charge(TRAPEZOID_CHARGE)
    return x_new


# ---------------------------------------------------------------- Steppers
def modified_step_fsal(
    system: PartitionedSystem,
    state: SplitState,
    h: float,
    cfg: StageSolveConfig,
    counter: EvalCounter,
    f_start: Optional[Vector] = None,
) -> tuple[SplitState, Vector]:
    """One step of the one-step modification of Hines' method, plus f at the new point.

    ``f_start`` may carry f(x_n, y_n, t_n) from the previous step; the explicit
    half-step is then free. The returned f(x_{n+1}, y_{n+1}, t_{n+1}) is read off
    the trapezoid stage, (x_{n+1} - x_{n+1/2}) * 2 / h, at no cost.
    """
    if not h > 0.0:
        raise PreconditionError(f"step size must be positive, got {h!r}")
    system.check_state(state)
    t = state.t
    if f_start is None:
        f_start = ensure_finite(np.asarray(system.eval_f(state.x, state.y, t), float), "f", t)
        counter.charge(EXPLICIT_CHARGE)
    x_half = state.x + 0.5 * h * f_start
    y_new = solve_midpoint_stage(system, x_half, state.y, t + 0.5 * h, h, cfg, counter)
    x_new = solve_trapezoid_stage(system, x_half, y_new, t + h, h, cfg, counter)
    return SplitState(t + h, x_new, y_new), (x_new - x_half) * (2.0 / h)


def modified_step(
    system: PartitionedSystem,
    state: SplitState,
    h: float,
    cfg: StageSolveConfig,
    counter: EvalCounter,
    f_start: Optional[Vector] = None,
) -> SplitState:
    """x_{n+1/2} = x_n + (h/2) f_n, midpoint stage in y, trapezoid stage in x."""
    return modified_step_fsal(system, state, h, cfg, counter, f_start)[0]


def hines_step(
    system: PartitionedSystem,
    stg: StaggeredState,
    h: float,
    cfg: StageSolveConfig,
    counter: EvalCounter,
) -> StaggeredState:
    """x_n -> x_{n+1} with y frozen at t_{n+1/2}, then y_{n+1/2} -> y_{n+3/2} with x_{n+1}."""
    if not h > 0.0:
        raise PreconditionError(f"step size must be positive, got {h!r}")
    t_half = stg.t_n + 0.5 * h
    x_new = implicit_x_stage(
        "hines_x", system, stg.y_half, stg.x_n, t_half, h, 0.5, stg.x_n, cfg, counter
    )
    counter.charge(HINES_STAGE_CHARGE)
    y_next = implicit_y_stage(
        "hines_y", system, x_new, stg.y_half, stg.t_n + h, h, 0.5, stg.y_half, cfg, counter
    )
    counter.charge(HINES_STAGE_CHARGE)
    return StaggeredState(stg.t_n + h, x_new, y_next)


def hines_bootstrap(
    system: PartitionedSystem,
    initial: SplitState,
    h: float,
    cfg: StageSolveConfig,
    counter: EvalCounter,
) -> StaggeredState:
    """y_{1/2} from the y-part of a modified step of size h/2 (local error O(h^3)).

    The work goes to ``counter.overhead_fevals``.
    """
    if not h > 0.0:
        raise PreconditionError(f"step size must be positive, got {h!r}")
    system.check_state(initial)
    scratch = EvalCounter()
    t0 = initial.t
    fx = ensure_finite(np.asarray(system.eval_f(initial.x, initial.y, t0), float), "f", t0)
    scratch.charge(EXPLICIT_CHARGE)
    x_quarter = initial.x + 0.25 * h * fx
    y_half = solve_midpoint_stage(
        system, x_quarter, initial.y, t0 + 0.25 * h, 0.5 * h, cfg, scratch
    )
    counter.overhead_fevals += scratch.fevals
    counter.jacobian_evals += scratch.jacobian_evals
    counter.newton_iterations += scratch.newton_iterations
    return StaggeredState(t0, initial.x.copy(), y_half)


# ---------------------------------------------------------------- Drivers
def integrate_constant(
    system: PartitionedSystem,
    initial: SplitState,
    t_end: float,
    n_steps: int,
    method: ConstantMethod,
    cfg: Optional[SolverConfig] = None,
) -> RunRecord:
    """Integrate with n_steps equal steps; the last node is pinned to t_end."""
    if n_steps < 1:
        raise PreconditionError("n_steps must be >= 1")
    if not t_end > initial.t:
        raise PreconditionError("t_end must lie after the initial time")
    cfg = cfg or SolverConfig()
    stage_cfg = cfg.stage
    h = (t_end - initial.t) / n_steps
    counter = EvalCounter()
    record = RunRecord(system.name, method, counter)
    record.record(initial)

    def node_time(k: int) -> float:
        return t_end if k == n_steps else initial.t + k * h

    if method == "hines":
        stg = hines_bootstrap(system, initial, h, stage_cfg, counter)
        for k in range(1, n_steps + 1):
            y_before = stg.y_half
            stg = hines_step(system, stg, h, stage_cfg, counter)
            counter.steps_accepted += 1
            # y at the integer node: mean of the straddling half-node values
            node = SplitState(node_time(k), stg.x_n, 0.5 * (y_before + stg.y_half))
            if cfg.keep_trajectory or k == n_steps:
                record.record(node)
        record.final_state = node
        return record

    if method == "cmhines":
        stepper = modified_step
    elif method == "pr":
        from parthines.services.splitting import pr_step

        stepper = pr_step
    else:
        raise PreconditionError(f"unknown constant-step method {method!r}")

    state = initial
    for k in range(1, n_steps + 1):
        stepped = stepper(system, state, h, stage_cfg, counter)
        state = SplitState(node_time(k), stepped.x, stepped.y)
        counter.steps_accepted += 1
        if cfg.keep_trajectory or k == n_steps:
            record.record(state)
    record.final_state = state
    return record


def richardson_constant(
    system: PartitionedSystem,
    initial: SplitState,
    t_end: float,
    n_steps: int,
    cfg: Optional[SolverConfig] = None,
) -> tuple[SplitState, EvalCounter]:
    """Constant-step modified method extrapolated from n and 2n steps (order 4)."""
    cfg = (cfg or SolverConfig()).model_copy(update={"keep_trajectory": False})
    coarse = integrate_constant(system, initial, t_end, n_steps, "cmhines", cfg)
    fine = integrate_constant(system, initial, t_end, 2 * n_steps, "cmhines", cfg)
    assert coarse.final_state is not None and fine.final_state is not None
    z_coarse = coarse.final_state.stacked()
    z_fine = fine.final_state.stacked()
    counter = EvalCounter(
        fevals=coarse.counter.fevals + fine.counter.fevals,
        jacobian_evals=coarse.counter.jacobian_evals + fine.counter.jacobian_evals,
        steps_accepted=3 * n_steps,
    )
    extrapolated = z_fine + (z_fine - z_coarse) / 3.0
    return SplitState.from_stacked(t_end, extrapolated, system.nx), counter
