"""Error estimators, the PI controller and the adaptive driver."""

from __future__ import annotations

import csv

import numpy as np
import pytest

from parthines.core.errors import EvaluationError, PreconditionError, StepSizeUnderflowError
from parthines.core.system import EvalCounter, SplitState
from parthines.models import exact_flow, linear_test_system, model_case, null_case
from parthines.schemas.solver import ControllerSettings, SolverConfig, ToleranceSpec
from parthines.schemas.stability import TestSystemParams
from parthines.services.adaptive import (
    ORDER_K,
    ControllerState,
    ErrorEstimate,
    StepHistory,
    controller_propose,
    embedded_error,
    estimate_embedded,
    estimate_richardson,
    increment_change,
    integrate_adaptive,
    scaled_norm,
    third_derivative,
)
from parthines.services.harness import loglog_slope
from tests.helpers import DATA_DIR, nan_system

UNIT_GAINS = ControllerSettings(
    k_beta1=1.0, k_beta2=1.0, safety=1.0, growth_max=3.0, shrink_min=0.2, reject_max=0.5
)


def _estimate(ratio: float) -> ErrorEstimate:
    state = SplitState(0.0, np.zeros(1), np.zeros(1))
    return ErrorEstimate(np.zeros(2), ratio, state)


def _exact_history(matrix: np.ndarray, initial: SplitState, times: list[float]) -> StepHistory:
    """Nodes of the exact flow of z' = M z with their derivatives."""
    history = StepHistory()
    nx = initial.x.shape[0]
    for t in times:
        node = exact_flow(matrix, initial, t)
        dz = matrix @ node.stacked()
        history.push(node, dz[:nx], dz[nx:])
    return history


def _cubic_history(times: list[float]) -> StepHistory:
    """Nodes of z(t) = t^3 in both blocks, z' = 3 t^2."""
    history = StepHistory()
    for t in times:
        z, dz = np.array([t**3]), np.array([3 * t**2])
        history.push(SplitState(t, z, z.copy()), dz, dz.copy())
    return history


# ---------------------------------------------------------------- Controller
def test_controller_follows_golden_trace() -> None:
    with open(DATA_DIR / "controller_trace.csv", newline="") as handle:
        rows = list(csv.DictReader(line for line in handle if not line.startswith("#")))
    ctrl = ControllerState(1.0, 1, 1e-12, 100.0, UNIT_GAINS)
    for row in rows:
        h_next, accept = controller_propose(ctrl, _estimate(float(row["ratio"])))
        assert accept == (row["accept"] == "true")
        assert h_next == pytest.approx(float(row["h_next"]), rel=1e-14)


def test_rejection_never_grows_the_step() -> None:
    ctrl = ControllerState(1.0, 3, 1e-6, 10.0)
    h_next, accept = controller_propose(ctrl, _estimate(1.0001))
    assert not accept
    assert h_next <= 0.5
    assert ctrl.prev_error_ratio is None


def test_zero_error_is_floored_and_growth_capped() -> None:
    ctrl = ControllerState(1.0, 3, 1e-6, 10.0)
    h_next, accept = controller_propose(ctrl, _estimate(0.0))
    assert accept and h_next == pytest.approx(3.0)
    assert ctrl.prev_error_ratio == 1e-12


def test_step_size_underflow() -> None:
    ctrl = ControllerState(1e-3, 3, 1e-3, 1.0)
    with pytest.raises(StepSizeUnderflowError):
        controller_propose(ctrl, _estimate(10.0))


def test_controller_state_validation() -> None:
    with pytest.raises(PreconditionError):
        ControllerState(2.0, 3, 1e-3, 1.0)
    with pytest.raises(PreconditionError):
        ControllerState(0.5, 0, 1e-3, 1.0)


# ---------------------------------------------------------------- Estimators
def test_scaled_norm_uses_larger_magnitude() -> None:
    err = np.array([1e-3, 1e-6])
    norm = scaled_norm(err, np.array([1.0, 0.0]), np.array([2.0, 0.0]), 1e-3, np.array([0.0, 1e-6]))
    assert norm == pytest.approx(1.0)


@pytest.mark.parametrize("mode", ["divided_difference", "hermite"])
def test_third_derivative_is_exact_for_cubics(mode: str) -> None:
    history = _cubic_history([0.0, 0.3])
    t_new = 0.7
    z_new = np.array([t_new**3, t_new**3])
    dz_new = np.array([3 * t_new**2, 3 * t_new**2])
    np.testing.assert_allclose(third_derivative(history, z_new, dz_new, t_new, mode), 6.0)


def test_history_keeps_last_three_nodes() -> None:
    history = _cubic_history([0.0, 0.1, 0.2, 0.3])
    assert len(history) == 3
    assert history[0].t == 0.1 and history[-1].t == 0.3


def test_embedded_estimate_falls_back_to_richardson(damped_oscillator, solver_cfg) -> None:
    matrix, system, initial = damped_oscillator
    abs_tol = np.full(2, 1e-6)
    history = _exact_history(matrix, initial, [0.0])
    counter = EvalCounter()
    fallback = estimate_embedded(system, initial, 0.1, history, solver_cfg, counter, 1e-6, abs_tol)
    assert counter.fevals == 1.0 + 1.5 + 2 * 1.5
    richardson = estimate_richardson(
        system, initial, 0.1, (1, 2), False, solver_cfg.stage, EvalCounter(), 1e-6, abs_tol
    )
    np.testing.assert_array_equal(fallback.err, richardson.err)
    assert fallback.scaled_norm == richardson.scaled_norm

    # one node is enough for the Hermite variant
    cfg = SolverConfig(embedded_derivative="hermite")
    counter = EvalCounter()
    estimate = estimate_embedded(system, initial, 0.1, history, cfg, counter, 1e-6, abs_tol)
    assert counter.fevals == 2.5 + 1.0
    assert estimate.f_next is not None and estimate.g_next is not None


def test_embedded_error_matches_leading_term(damped_oscillator) -> None:
    matrix, _, initial = damped_oscillator
    h = 0.02
    history = _exact_history(matrix, initial, [0.0, h])
    new = exact_flow(matrix, initial, 2 * h).stacked()
    err = embedded_error(history, new, matrix @ new, 2 * h, h)
    middle = exact_flow(matrix, initial, h).stacked()
    leading = -(h * h / 12.0) * np.linalg.matrix_power(matrix, 3) @ middle
    assert np.max(np.abs(err - leading)) <= 0.15 * np.max(np.abs(leading))


def test_embedded_estimate_vanishes_on_null_system(solver_cfg) -> None:
    case = null_case()
    history = StepHistory()
    for t in (0.0, 0.1):
        history.push(SplitState(t, case.initial.x, case.initial.y), np.zeros(1), np.zeros(1))
    shifted = SplitState(0.1, case.initial.x, case.initial.y)
    estimate = estimate_embedded(
        case.system, shifted, 0.1, history, solver_cfg, EvalCounter(), 1e-6, np.ones(2)
    )
    assert estimate.scaled_norm == 0.0
    np.testing.assert_array_equal(estimate.proposed_solution.stacked(), shifted.stacked())


def test_richardson_error_accumulates_at_second_order(solver_cfg) -> None:
    system = linear_test_system(TestSystemParams(mu=-1.0, lam=-2.0))
    initial = SplitState(0.0, np.array([1.0]), np.array([1.0]))
    accumulated = []
    for k in range(2, 10):
        h = 2.0**-k
        state, total = initial, np.zeros(2)
        for _ in range(2**k):
            estimate = estimate_richardson(
                system, state, h, (1, 2), False, solver_cfg.stage, EvalCounter(), 1e-6, np.ones(2)
            )
            total += estimate.err
            state = estimate.proposed_solution
        accumulated.append(float(np.max(np.abs(total))))
    ratios = [coarse / fine for coarse, fine in zip(accumulated, accumulated[1:])]
    assert 3.6 <= ratios[-1] <= 4.4


def test_richardson_estimate_tracks_the_local_error(damped_oscillator, solver_cfg) -> None:
    matrix, system, initial = damped_oscillator
    for h in (0.1, 0.05, 0.025):
        estimate = estimate_richardson(
            system, initial, h, (1, 2), False, solver_cfg.stage, EvalCounter(), 1e-6, np.ones(2)
        )
        fine = estimate.proposed_solution.stacked()
        local = fine - exact_flow(matrix, initial, h).stacked()
        ratio = np.max(np.abs(estimate.err)) / np.max(np.abs(local))
        assert 0.5 <= ratio <= 2.0


def test_extrapolated_error_model_scales_with_fifth_power(damped_oscillator, solver_cfg) -> None:
    _, system, initial = damped_oscillator
    abs_tol = np.full(2, 1e-6)
    norms = [
        estimate_richardson(
            system, initial, h, (1, 3), True, solver_cfg.stage, EvalCounter(), 1e-6, abs_tol
        ).scaled_norm
        for h in (0.01, 0.005)
    ]
    assert 0.8 * 32.0 <= norms[0] / norms[1] <= 1.2 * 32.0


def test_increment_change() -> None:
    ones = np.ones(2)
    bent = [np.zeros(2), np.array([1.0, 0.0]), np.array([1.5, 0.5])]
    assert increment_change(bent, ones) == pytest.approx(1.0 / 3.0)
    line = [np.zeros(2), np.array([1.0, 2.0]), np.array([2.0, 4.0]), np.array([3.0, 6.0])]
    assert increment_change(line, ones) == 0.0
    turned = [np.zeros(2), np.array([1.0, 0.0]), np.zeros(2)]
    assert increment_change(turned, ones) == 1.0
    assert increment_change([np.ones(2)] * 3, ones) == 0.0


def test_richardson_estimate_charges_with_fsal(damped_oscillator, solver_cfg) -> None:
    _, system, initial = damped_oscillator
    abs_tol = np.full(2, 1e-6)
    counter = EvalCounter()
    fine = estimate_richardson(
        system, initial, 0.1, (1, 2), False, solver_cfg.stage, counter, 1e-6, abs_tol
    )
    assert counter.fevals == 1.0 + 1.5 + 2 * 1.5
    assert fine.f_next is not None
    counter = EvalCounter()
    extrapolated = estimate_richardson(
        system, initial, 0.1, (1, 3), True, solver_cfg.stage, counter, 1e-6, abs_tol
    )
    assert counter.fevals == 1.0 + 1.5 + 3 * 1.5
    assert extrapolated.f_next is None
    assert extrapolated.proposed_solution.t == pytest.approx(0.1)


def test_richardson_rejects_unknown_subdivisions(damped_oscillator, solver_cfg) -> None:
    _, system, initial = damped_oscillator
    with pytest.raises(PreconditionError):
        estimate_richardson(
            system, initial, 0.1, (1, 4), False, solver_cfg.stage, EvalCounter(), 1e-6, np.ones(2)
        )


# ---------------------------------------------------------------- Driver
@pytest.mark.parametrize("method", sorted(ORDER_K))
def test_adaptive_run_meets_tolerance(damped_oscillator, method: str) -> None:
    matrix, system, initial = damped_oscillator
    record = integrate_adaptive(system, initial, 2.0, ToleranceSpec(rel_tol=1e-6), method)
    exact = exact_flow(matrix, initial, 2.0).stacked()
    assert record.final_state.t == 2.0
    assert record.times[-1] == 2.0
    assert np.all(np.diff(record.times) > 0.0)
    assert np.max(np.abs(record.final_state.stacked() - exact)) < 1e-4
    assert record.counter.steps_accepted == len(record.times) - 1


@pytest.mark.parametrize("method", sorted(ORDER_K))
def test_error_shrinks_with_tolerance(damped_oscillator, method: str) -> None:
    matrix, system, initial = damped_oscillator
    exact = exact_flow(matrix, initial, 2.0).stacked()
    errors = []
    for tol in (1e-4, 1e-7):
        record = integrate_adaptive(system, initial, 2.0, ToleranceSpec(rel_tol=tol), method)
        errors.append(np.max(np.abs(record.final_state.stacked() - exact)))
    assert errors[1] < errors[0]


def test_hermite_variant_runs(damped_oscillator) -> None:
    matrix, system, initial = damped_oscillator
    cfg = SolverConfig(embedded_derivative="hermite")
    record = integrate_adaptive(system, initial, 2.0, ToleranceSpec(rel_tol=1e-6), "modhnew", cfg)
    exact = exact_flow(matrix, initial, 2.0).stacked()
    assert np.max(np.abs(record.final_state.stacked() - exact)) < 1e-3


@pytest.mark.parametrize(
    ("method", "charge"),
    [("modhines", lambda n: 1.0 + 4.5 * n), ("modhext", lambda n: 7.0 * n)],
)
def test_richardson_effort_on_null_system(method: str, charge) -> None:
    case = null_case(nx=2, ny=2)
    record = integrate_adaptive(
        case.system, case.initial, case.t_end, ToleranceSpec(rel_tol=1e-6), method
    )
    counter = record.counter
    assert counter.steps_rejected == 0
    assert counter.fevals == pytest.approx(charge(counter.steps_accepted))


def test_embedded_effort_on_null_system() -> None:
    case = null_case()
    cfg = SolverConfig(warmup_steps=2)
    record = integrate_adaptive(
        case.system, case.initial, case.t_end, ToleranceSpec(rel_tol=1e-6), "modhnew", cfg
    )
    n = record.counter.steps_accepted
    assert n > 2
    # start-up f, two warm-up Richardson steps, then 1.5 + 1 per embedded step
    assert record.counter.fevals == pytest.approx(1.0 + 2 * 5.5 + 2.5 * (n - 2))


def test_persistent_evaluation_failure_is_raised() -> None:
    initial = SplitState(0.0, np.zeros(1), np.zeros(1))
    cfg = SolverConfig(max_consecutive_failures=3)
    with pytest.raises(EvaluationError):
        integrate_adaptive(nan_system(), initial, 1.0, ToleranceSpec(rel_tol=1e-3), "modhines", cfg)


def test_adaptive_rejects_bad_interval(damped_oscillator) -> None:
    _, system, initial = damped_oscillator
    with pytest.raises(PreconditionError):
        integrate_adaptive(system, initial, 0.0, ToleranceSpec(rel_tol=1e-3), "modhines")


def test_extrapolation_is_cheaper_than_the_fine_solution_on_hh() -> None:
    case = model_case("hh")
    fevals = {}
    for method in ("modhines", "modhext"):
        record = integrate_adaptive(
            case.system, case.initial, case.t_end, ToleranceSpec(rel_tol=1e-6), method
        )
        fevals[method] = record.counter.fevals
    assert fevals["modhext"] <= fevals["modhines"]


@pytest.mark.slow
@pytest.mark.parametrize(
    ("method", "low", "high"),
    [("modhines", 1.6, 2.6), ("modhnew", 1.6, 2.6), ("modhext", 3.2, 5.0)],
)
def test_adaptive_observed_order(damped_oscillator, method: str, low: float, high: float) -> None:
    matrix, system, initial = damped_oscillator
    exact = exact_flow(matrix, initial, 2.0).stacked()
    mean_h, errors = [], []
    for tol in (1e-5, 1e-6, 1e-7, 1e-8):
        cfg = SolverConfig(keep_trajectory=False)
        record = integrate_adaptive(system, initial, 2.0, ToleranceSpec(rel_tol=tol), method, cfg)
        mean_h.append(2.0 / record.counter.steps_accepted)
        errors.append(float(np.max(np.abs(record.final_state.stacked() - exact))))
    assert low <= loglog_slope(mean_h, errors) <= high
