"""Error estimation, PI step-size control and the accept/reject loop.

Three variants of the modified method:

* ``modhines``: Richardson with subdivisions {1, 2}, advance with the fine solution
* ``modhext``: Richardson with subdivisions {1, 3}, advance with the extrapolated solution;
  the controlled quantity is err * delta^2 ~ h^5, delta the turn of the fine substep
  increments across the step, so the step size follows the error of the extrapolated value
* ``modhnew``: leading-term estimate -(h^2/12) z''' from stored right-hand sides
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from parthines.core.errors import (
    EvaluationError,
    PreconditionError,
    StepFailureError,
    StepSizeUnderflowError,
)
from parthines.core.system import EvalCounter, PartitionedSystem, RunRecord, SplitState, evaluate
from parthines.schemas.solver import (
    AdaptiveMethod,
    ControllerSettings,
    SolverConfig,
    StageSolveConfig,
    ToleranceSpec,
)
from parthines.services.solvers import modified_step_fsal

logger = logging.getLogger(__name__)

Divisions = tuple[int, int]

# exponent k of the controlled quantity ~ h^k: h^3 Richardson differences, h^5 for the
# extrapolated value, h^2 for the embedded estimate
ORDER_K: dict[str, int] = {"modhines": 3, "modhext": 5, "modhnew": 2}
RICHARDSON_SETUP: dict[str, tuple[Divisions, bool]] = {
    "modhines": ((1, 2), False),
    "modhext": ((1, 3), True),
}
RATIO_FLOOR = 1e-12
# the last step is stretched to t_end when it would leave less than this fraction of h
STRETCH = 0.01


@dataclass(frozen=True, eq=False)
class ErrorEstimate:
    err: np.ndarray
    scaled_norm: float
    proposed_solution: SplitState
    # f (and g) at the proposed point when they are already known
    f_next: Optional[np.ndarray] = None
    g_next: Optional[np.ndarray] = None

    @property
    def accept(self) -> bool:
        return self.scaled_norm <= 1.0


@dataclass
class ControllerState:
    h_current: float
    order_k: int
    h_min: float
    h_max: float
    settings: ControllerSettings = field(default_factory=ControllerSettings)
    prev_error_ratio: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.h_min <= self.h_current <= self.h_max:
            raise PreconditionError(
                f"need 0 < h_min <= h <= h_max, got {self.h_min!r}, {self.h_current!r}, "
                f"{self.h_max!r}"
            )
        if self.order_k < 1:
            raise PreconditionError("order_k must be >= 1")


@dataclass(frozen=True, eq=False)
class HistoryNode:
    t: float
    z: np.ndarray
    dz: np.ndarray  # stacked (f, g)


class StepHistory:
    """The last accepted nodes with their stored right-hand sides."""

    def __init__(self, depth: int = 3) -> None:
        self._nodes: deque[HistoryNode] = deque(maxlen=depth)

    def __len__(self) -> int:
        return len(self._nodes)

    def __getitem__(self, index: int) -> HistoryNode:
        return self._nodes[index]

    def push(self, state: SplitState, fx: np.ndarray, gy: np.ndarray) -> None:
        self._nodes.append(HistoryNode(state.t, state.stacked(), np.concatenate([fx, gy])))


def error_weights(
    z_old: np.ndarray, z_new: np.ndarray, rel_tol: float, abs_tol: np.ndarray
) -> np.ndarray:
    return rel_tol * np.maximum(np.abs(z_old), np.abs(z_new)) + abs_tol


def scaled_norm(
    err: np.ndarray, z_old: np.ndarray, z_new: np.ndarray, rel_tol: float, abs_tol: np.ndarray
) -> float:
    """max_i |err_i| / (TOL max(|z_old,i|, |z_new,i|) + AbsTol_i)."""
    weights = error_weights(z_old, z_new, rel_tol, abs_tol)
    return float(np.max(np.abs(err) / weights))


def increment_change(nodes: Sequence[np.ndarray], weights: np.ndarray) -> float:
    """Turn of the sub-step increments across a step, ~ h |z''| / |z'|.

    The first and last increments are scaled componentwise by ``weights`` and compared in
    the max norm. The value is at most 1, and 0 when the state does not move.
    """
    first = (nodes[1] - nodes[0]) / weights
    last = (nodes[-1] - nodes[-2]) / weights
    size = float(np.max(np.abs(first)) + np.max(np.abs(last)))
    if size == 0.0:
        return 0.0
    return float(np.max(np.abs(last - first))) / size


def estimate_richardson(
    system: PartitionedSystem,
    state: SplitState,
    h: float,
    divisions: Divisions,
    extrapolate: bool,
    cfg: StageSolveConfig,
    counter: EvalCounter,
    rel_tol: float,
    abs_tol: np.ndarray,
    f_start: Optional[np.ndarray] = None,
) -> ErrorEstimate:
    """Compare one step h with m substeps h/m; err = (z_fine - z_coarse) / (m^2 - 1).

    Without extrapolation the fine solution is proposed and ``scaled_norm`` measures
    err ~ h^3. With extrapolation z_fine + err is proposed; its error is O(h^5) and is
    modelled as err * delta^2 with delta = ``increment_change`` of the fine substeps.
    """
    if divisions not in ((1, 2), (1, 3)):
        raise PreconditionError(f"unsupported subdivisions {divisions!r}")
    m = divisions[1]
    if f_start is None:
        fx, _ = evaluate(system, state, counter)
        f_start = fx
    coarse, _ = modified_step_fsal(system, state, h, cfg, counter, f_start)
    fine, f_fine = state, f_start
    nodes = [state.stacked()]
    for _ in range(m):
        fine, f_fine = modified_step_fsal(system, fine, h / m, cfg, counter, f_fine)
        nodes.append(fine.stacked())
    z_old, z_coarse, z_fine = state.stacked(), coarse.stacked(), fine.stacked()
    err = (z_fine - z_coarse) / (m * m - 1)
    if not extrapolate:
        norm = scaled_norm(err, z_old, z_fine, rel_tol, abs_tol)
        return ErrorEstimate(err, norm, fine, f_fine)
    proposed = SplitState.from_stacked(fine.t, z_fine + err, system.nx)
    z_new = proposed.stacked()
    delta = increment_change(nodes, error_weights(z_old, z_new, rel_tol, abs_tol))
    norm = scaled_norm(err, z_old, z_new, rel_tol, abs_tol) * delta * delta
    return ErrorEstimate(err, norm, proposed)


def third_derivative(
    history: StepHistory,
    z_new: np.ndarray,
    dz_new: np.ndarray,
    t_new: float,
    mode: Literal["divided_difference", "hermite"] = "divided_difference",
) -> np.ndarray:
    """Estimate z''' at the new node from stored right-hand sides.

    ``divided_difference``: 2 [z'; t_{n-1}, t_n, t_{n+1}].
    ``hermite``: third derivative of the cubic Hermite interpolant on [t_n, t_{n+1}];
    it vanishes identically for the x-block of the modified method.
    """
    last = history[-1]
    if mode == "hermite":
        h = t_new - last.t
        return 6.0 / h**2 * (last.dz + dz_new - 2.0 * (z_new - last.z) / h)
    prev = history[-2]
    slope_new = (dz_new - last.dz) / (t_new - last.t)
    slope_old = (last.dz - prev.dz) / (last.t - prev.t)
    return 2.0 * (slope_new - slope_old) / (t_new - prev.t)


def embedded_error(
    history: StepHistory,
    z_new: np.ndarray,
    dz_new: np.ndarray,
    t_new: float,
    h: float,
    mode: Literal["divided_difference", "hermite"] = "divided_difference",
) -> np.ndarray:
    """err = -(h^2 / 12) z''' for both blocks."""
    return -(h * h / 12.0) * third_derivative(history, z_new, dz_new, t_new, mode)


def estimate_embedded(
    system: PartitionedSystem,
    state: SplitState,
    h: float,
    history: StepHistory,
    cfg: SolverConfig,
    counter: EvalCounter,
    rel_tol: float,
    abs_tol: np.ndarray,
    f_start: Optional[np.ndarray] = None,
) -> ErrorEstimate:
    """One modified step with the leading-term estimate; the step result is not modified.

    With too few stored nodes for the derivative estimate this falls back to Richardson
    with subdivisions {1, 2}.
    """
    needed = 1 if cfg.embedded_derivative == "hermite" else 2
    if len(history) < needed:
        logger.debug("t=%.6g: %d stored nodes, using Richardson {1, 2}", state.t, len(history))
        return estimate_richardson(
            system, state, h, (1, 2), False, cfg.stage, counter, rel_tol, abs_tol, f_start
        )
    result, _ = modified_step_fsal(system, state, h, cfg.stage, counter, f_start)
    fx, gy = evaluate(system, result, counter)
    z_new = result.stacked()
    err = embedded_error(
        history, z_new, np.concatenate([fx, gy]), result.t, h, cfg.embedded_derivative
    )
    norm = scaled_norm(err, state.stacked(), z_new, rel_tol, abs_tol)
    return ErrorEstimate(err, norm, result, fx, gy)


def controller_propose(ctrl: ControllerState, estimate: ErrorEstimate) -> tuple[float, bool]:
    """PI step-size proposal h * safety * (1/r_n)^b1 * (r_{n-1}/r_n)^b2 with b_i = (k b_i)/k.

    The memory r_{n-1} only advances on accepted steps. On rejection the factor is
    capped by ``reject_max`` so h strictly decreases.
    """
    if not math.isfinite(estimate.scaled_norm):
        raise PreconditionError(f"error ratio must be finite, got {estimate.scaled_norm!r}")
    s = ctrl.settings
    r = max(estimate.scaled_norm, RATIO_FLOOR)
    r_prev = r if ctrl.prev_error_ratio is None else ctrl.prev_error_ratio
    beta1, beta2 = s.k_beta1 / ctrl.order_k, s.k_beta2 / ctrl.order_k
    factor = s.safety * (1.0 / r) ** beta1 * (r_prev / r) ** beta2
    accept = estimate.accept
    if accept:
        factor = min(s.growth_max, max(s.shrink_min, factor))
        ctrl.prev_error_ratio = r
    else:
        factor = max(s.shrink_min, min(s.reject_max, factor))
    h_next = min(ctrl.h_max, ctrl.h_current * factor)
    if h_next < ctrl.h_min:
        raise StepSizeUnderflowError(estimate.proposed_solution.t, h_next)
    ctrl.h_current = h_next
    return h_next, accept


def _default_h_min(t0: float, t_end: float) -> float:
    return 64.0 * float(np.spacing(max(abs(t0), abs(t_end), t_end - t0)))


def integrate_adaptive(
    system: PartitionedSystem,
    initial: SplitState,
    t_end: float,
    tol: ToleranceSpec,
    method: AdaptiveMethod,
    cfg: Optional[SolverConfig] = None,
) -> RunRecord:
    """Integrate with error control; every accepted step satisfies scaled_norm <= 1."""
    if not t_end > initial.t:
        raise PreconditionError("t_end must lie after the initial time")
    if method not in ORDER_K:
        raise PreconditionError(f"unknown adaptive method {method!r}")
    system.check_state(initial)
    cfg = cfg or SolverConfig()
    span = t_end - initial.t
    h_max = min(cfg.h_max or span, span)
    h_min = cfg.h_min or _default_h_min(initial.t, t_end)
    h0 = min(cfg.h0 or span / 1000.0, h_max)
    ctrl = ControllerState(h0, ORDER_K[method], min(h_min, h0), h_max, cfg.controller)
    abs_tol = tol.resolve(system.typical_size)
    counter = EvalCounter()
    record = RunRecord(system.name, method, counter)
    record.record(initial)

    state = initial
    f_start: Optional[np.ndarray] = None
    history: Optional[StepHistory] = None
    if method == "modhnew":
        history = StepHistory()
        fx, gy = evaluate(system, initial, counter)
        history.push(initial, fx, gy)
        f_start = fx

    h = h0
    strikes = 0
    while state.t < t_end:
        last = state.t + (1.0 + STRETCH) * h >= t_end
        if last:
            h = t_end - state.t
        ctrl.h_current = h
        try:
            estimate = _attempt(
                system, state, h, method, cfg, counter, tol.rel_tol, abs_tol, f_start, history
            )
            if not math.isfinite(estimate.scaled_norm):
                raise StepFailureError("estimate", "non-finite error estimate")
        except (StepFailureError, EvaluationError) as exc:
            strikes += 1
            counter.steps_rejected += 1
            if strikes > cfg.max_consecutive_failures:
                raise
            h *= 0.5
            logger.debug("t=%.6g: %s; retrying with h=%.3e", state.t, exc, h)
            if h < ctrl.h_min:
                raise StepSizeUnderflowError(state.t, h) from exc
            continue

        ctrl.order_k = _order_for(method, history, counter, cfg)
        h_next, accept = controller_propose(ctrl, estimate)
        if not accept:
            strikes += 1
            counter.steps_rejected += 1
            logger.debug(
                "t=%.6g: rejected h=%.3e (r=%.3g), next h=%.3e",
                state.t,
                h,
                estimate.scaled_norm,
                h_next,
            )
            if strikes > cfg.max_consecutive_failures:
                raise StepFailureError("controller", f"{strikes} consecutive rejections")
            h = h_next
            continue

        strikes = 0
        counter.steps_accepted += 1
        proposed = estimate.proposed_solution
        state = SplitState(t_end if last else proposed.t, proposed.x, proposed.y)
        f_start = estimate.f_next
        if history is not None:
            if estimate.f_next is None or estimate.g_next is None:
                fx, gy = evaluate(system, state, counter)
            else:
                fx, gy = estimate.f_next, estimate.g_next
            history.push(state, fx, gy)
            f_start = fx
        if cfg.keep_trajectory or state.t >= t_end:
            record.record(state)
        h = h_next

    record.final_state = state
    logger.debug(
        "%s/%s: %d accepted, %d rejected, %.1f fevals",
        system.name,
        method,
        counter.steps_accepted,
        counter.steps_rejected,
        counter.fevals,
    )
    return record


def _in_warmup(history: Optional[StepHistory], counter: EvalCounter, cfg: SolverConfig) -> bool:
    if history is None:
        return False
    needed = 1 if cfg.embedded_derivative == "hermite" else 2
    return counter.steps_accepted < cfg.warmup_steps or len(history) < needed


def _order_for(
    method: str, history: Optional[StepHistory], counter: EvalCounter, cfg: SolverConfig
) -> int:
    if method == "modhnew" and _in_warmup(history, counter, cfg):
        return ORDER_K["modhines"]
    return ORDER_K[method]


def _attempt(
    system: PartitionedSystem,
    state: SplitState,
    h: float,
    method: str,
    cfg: SolverConfig,
    counter: EvalCounter,
    rel_tol: float,
    abs_tol: np.ndarray,
    f_start: Optional[np.ndarray],
    history: Optional[StepHistory],
) -> ErrorEstimate:
    if method in RICHARDSON_SETUP:
        divisions, extrapolate = RICHARDSON_SETUP[method]
        return estimate_richardson(
            system, state, h, divisions, extrapolate, cfg.stage, counter, rel_tol, abs_tol, f_start
        )
    assert history is not None
    if counter.steps_accepted < cfg.warmup_steps:
        return estimate_richardson(
            system, state, h, (1, 2), False, cfg.stage, counter, rel_tol, abs_tol, f_start
        )
    return estimate_embedded(system, state, h, history, cfg, counter, rel_tol, abs_tol, f_start)
