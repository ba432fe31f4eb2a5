"""Reference solutions, convergence studies, sweeps and CSV output."""

from __future__ import annotations

import io
import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from parthines.core.errors import PreconditionError
from parthines.core.system import EvalCounter, RunRecord, SplitState
from parthines.models import ModelCase, model_case, null_case
from parthines.schemas.harness import SweepSpec, WorkPrecisionPoint, tolerance_grid
from parthines.schemas.models import BlockAssignment
from parthines.schemas.solver import SolverConfig
from parthines.services.harness import (
    SWEEP_HEADER,
    convergence_study,
    halving_steps,
    loglog_slope,
    mixed_error_norm,
    reference_solution,
    run_sweep,
    thin_indices,
    write_convergence_csv,
    write_sweep_csv,
    write_trajectory_csv,
)
from tests.helpers import nan_system


# ---------------------------------------------------------------- Helpers
def test_tolerance_grid_has_49_points() -> None:
    grid = tolerance_grid()
    assert len(grid) == 49
    assert grid[0] == pytest.approx(1e-2)
    assert grid[-1] == pytest.approx(1e-8)
    assert all(later < earlier for earlier, later in zip(grid, grid[1:]))


def test_sweep_spec_validation() -> None:
    with pytest.raises(ValidationError):
        SweepSpec(model="hh", methods=["modhines"], tol_list=[1e-4, 1e-3])
    with pytest.raises(ValidationError):
        SweepSpec(model="hh", methods=["rk45"])
    with pytest.raises(ValidationError):
        SweepSpec(model="hh", methods=[])


def test_loglog_slope_of_power_law() -> None:
    h = [0.1, 0.05, 0.025, 0.0125]
    assert loglog_slope(h, [3.0 * v**2 for v in h]) == pytest.approx(2.0)
    assert math.isnan(loglog_slope([0.1], [1.0]))
    assert math.isnan(loglog_slope([0.1, 0.05], [0.0, math.nan]))


def test_halving_steps() -> None:
    assert halving_steps(20.0, 8, 3) == [20.0 / 256, 20.0 / 512, 20.0 / 1024]


def test_mixed_error_norm() -> None:
    norm = mixed_error_norm(np.array([1.1, 0.0]), np.array([1.0, 0.0]), np.array([1.0, 0.5]))
    assert norm == pytest.approx(0.05)
    with pytest.raises(PreconditionError):
        mixed_error_norm(np.zeros(2), np.zeros(3), np.ones(2))


def test_thin_indices_keeps_endpoints() -> None:
    idx = thin_indices(1_000_001, 10_000)
    assert len(idx) <= 10_000
    assert idx[0] == 0 and idx[-1] == 1_000_000
    assert np.array_equal(thin_indices(5, None), np.arange(5))


# ---------------------------------------------------------------- CSV output
def test_trajectory_csv_uses_canonical_columns() -> None:
    case = model_case("hh", BlockAssignment.GATES_AS_X)
    record = RunRecord(case.system.name, "cmhines", EvalCounter())
    record.record(case.initial)
    out = io.StringIO()
    write_trajectory_csv(record, case.system, out)
    header, row = out.getvalue().splitlines()
    assert header == "t,V,m,n,h"
    assert [float(v) for v in row.split(",")] == [0.0, -4.5, 0.085, 0.5, 0.38]


def test_trajectory_csv_thinning() -> None:
    case = null_case()
    record = RunRecord("null", "cmhines", EvalCounter())
    for k in range(50):
        record.record(SplitState(k / 49, case.initial.x, case.initial.y))
    out = io.StringIO()
    write_trajectory_csv(record, case.system, out, max_rows=10)
    lines = out.getvalue().splitlines()
    assert lines[0] == "t,z0,z1"
    assert 2 <= len(lines) - 1 <= 10
    assert lines[-1].startswith("1,")


def test_sweep_csv_formats_failures() -> None:
    points = [
        WorkPrecisionPoint(
            model="hh",
            method="modhines",
            assignment="voltages_as_x",
            tol=0.01,
            fevals=12.5,
            jacevals=0,
            accepted=4,
            rejected=1,
            final_error=1e-3,
        ),
        WorkPrecisionPoint(
            model="hh",
            method="modhext",
            assignment="voltages_as_x",
            tol=0.01,
            fevals=0.0,
            jacevals=0,
            accepted=0,
            rejected=0,
            final_error=math.nan,
            failed=True,
            message="STEP_SIZE_UNDERFLOW",
        ),
    ]
    out = io.StringIO()
    write_sweep_csv(points, out)
    lines = out.getvalue().splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert lines[1] == "hh,modhines,voltages_as_x,0.01,12.5,0,4,1,0.001,false"
    assert lines[2].endswith(",nan,true")


# ---------------------------------------------------------------- Sweeps
def test_sweep_on_null_system_is_exact_and_ordered() -> None:
    case = null_case()
    spec = SweepSpec(model="null", methods=["modhines", "modhnew"], tol_list=tolerance_grid(4))
    points = run_sweep(spec, case=case, reference=case.initial, threads=2)
    assert [(p.method, p.tol) for p in points] == [
        (m, tol) for m in spec.methods for tol in spec.tol_list
    ]
    assert all(not p.failed and p.final_error == 0.0 for p in points)
    assert all(p.fevals > 0.0 and p.rejected == 0 for p in points)


def test_sweep_records_failed_points(caplog: pytest.LogCaptureFixture) -> None:
    initial = SplitState(0.0, np.zeros(1), np.zeros(1))
    case = ModelCase("nan", nan_system(), initial, 1.0)
    spec = SweepSpec(model="nan", methods=["modhext"], tol_list=[1e-3])
    cfg = SolverConfig(max_consecutive_failures=1)
    with caplog.at_level(logging.WARNING, logger="parthines.services.harness"):
        points = run_sweep(spec, case=case, reference=initial, cfg=cfg)
    assert len(points) == 1
    assert points[0].failed
    assert math.isnan(points[0].final_error)
    assert points[0].message == "EVALUATION_NOT_FINITE"
    assert "failed" in caplog.text


def test_convergence_study_rejects_bad_steps(damped_oscillator) -> None:
    _, system, initial = damped_oscillator
    case = ModelCase("oscillator", system, initial, 2.0)
    with pytest.raises(PreconditionError):
        convergence_study(case, "cmhines", [0.1, 0.2], reference=initial)
    with pytest.raises(PreconditionError):
        convergence_study(case, "cmhines", [0.3], reference=initial)


def test_convergence_csv_against_exact_flow(damped_oscillator) -> None:
    from parthines.models import exact_flow

    matrix, system, initial = damped_oscillator
    case = ModelCase("oscillator", system, initial, 2.0)
    reference = exact_flow(matrix, initial, 2.0)
    table = convergence_study(case, "hines", halving_steps(2.0, 4, 4), reference=reference)
    assert 1.8 <= table.slope <= 2.2
    out = io.StringIO()
    write_convergence_csv(table, out)
    lines = out.getvalue().splitlines()
    assert lines[0] == "model,method,assignment,h,n_steps,fevals,final_error,slope"
    assert len(lines) == 5
    assert lines[1].startswith("oscillator,hines,-,0.125,16,32,")


# ---------------------------------------------------------------- Benchmarks
@pytest.mark.slow
def test_hh_reference_is_certified_and_cached() -> None:
    case = model_case("hh")
    first = reference_solution(case)
    assert first.certified_accuracy <= 1e-8
    assert reference_solution(case) is first


@pytest.mark.slow
@pytest.mark.parametrize("method", ["hines", "cmhines"])
def test_hh_second_order_convergence(method: str) -> None:
    case = model_case("hh")
    table = convergence_study(case, method, halving_steps(20.0, 8, 6))
    assert 1.8 <= table.slope <= 2.2


@pytest.mark.slow
def test_sds_reference_is_certified() -> None:
    reference = reference_solution(model_case("sds"))
    assert reference.certified_accuracy <= 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("name", ["hh", "sds"])
def test_sweep_stays_within_the_error_envelope(name: str) -> None:
    spec = SweepSpec(model=name, methods=["modhines", "modhext", "modhnew"])
    assert len(spec.tol_list) == 49
    points = run_sweep(spec, case=model_case(name))
    completed = [p for p in points if not p.failed]
    assert completed
    for point in completed:
        assert point.final_error <= 100.0 * point.tol, (point.method, point.tol)
