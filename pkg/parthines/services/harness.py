"""Reference solutions, convergence studies and work-precision sweeps."""

from __future__ import annotations

import csv
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from parthines.core.config import settings
from parthines.core.errors import ParthinesError, PreconditionError, ReferenceFailureError
from parthines.core.system import PartitionedSystem, RunRecord, SplitState
from parthines.models import ModelCase, resolve_model
from parthines.schemas.harness import (
    ConvergencePoint,
    ConvergenceTable,
    SweepSpec,
    WorkPrecisionPoint,
    tolerance_grid,
)
from parthines.schemas.solver import (
    AdaptiveMethod,
    ConstantMethod,
    SolverConfig,
    ToleranceSpec,
)
from parthines.services.adaptive import integrate_adaptive
from parthines.services.solvers import integrate_constant, richardson_constant

logger = logging.getLogger(__name__)

REFERENCE_TOL = 1e-12
CERTIFY_THRESHOLD = 1e-8
# constant-step counts of the extrapolated cross-check
REFERENCE_STEPS: dict[str, int] = {"hh": 2**15, "sds": 2**16}
DEFAULT_REFERENCE_STEPS = 2**12
FLOAT_FORMAT = ".17g"
MAX_TRAJECTORY_ROWS = 10_000

SWEEP_HEADER = (
    "model",
    "method",
    "assignment",
    "tol",
    "fevals",
    "jacevals",
    "accepted",
    "rejected",
    "final_error",
    "failed",
)


@dataclass(frozen=True, eq=False)
class Reference:
    state: SplitState
    # mixed-norm disagreement of the two independent paths
    certified_accuracy: float


_reference_cache: dict[tuple[str, str, float], Reference] = {}
_reference_lock = threading.Lock()


def default_tolerances() -> list[float]:
    return tolerance_grid()


def mixed_error_norm(z: np.ndarray, z_ref: np.ndarray, typical_size: np.ndarray) -> float:
    """max_i |z_i - z_ref,i| / (|z_ref,i| + typical_size_i)."""
    z, z_ref = np.asarray(z, float), np.asarray(z_ref, float)
    if z.shape != z_ref.shape or z.shape != np.shape(typical_size):
        raise PreconditionError("error norm needs vectors of equal length")
    return float(np.max(np.abs(z - z_ref) / (np.abs(z_ref) + typical_size)))


def _cache_key(case: ModelCase, t_end: float) -> Optional[tuple[str, str, float]]:
    if case.params is None:
        return None
    return case.system.name, case.params.model_dump_json(), t_end


def reference_solution(
    case: ModelCase,
    t_end: Optional[float] = None,
    n_steps: Optional[int] = None,
    threshold: float = CERTIFY_THRESHOLD,
) -> Reference:
    """Final state from modhext at TOL = 1e-12, certified by extrapolated constant steps.

    Raises ReferenceFailureError when the two paths differ by more than ``threshold``
    in the mixed norm. Benchmark references are cached for the process lifetime.
    """
    t_end = case.t_end if t_end is None else t_end
    key = _cache_key(case, t_end)
    if key is not None:
        with _reference_lock:
            cached = _reference_cache.get(key)
        if cached is not None:
            return cached

    system = case.system
    cfg = SolverConfig(keep_trajectory=False)
    adaptive = integrate_adaptive(
        system, case.initial, t_end, ToleranceSpec(rel_tol=REFERENCE_TOL), "modhext", cfg
    )
    steps = n_steps or REFERENCE_STEPS.get(case.name, DEFAULT_REFERENCE_STEPS)
    extrapolated, _ = richardson_constant(system, case.initial, t_end, steps, cfg)
    assert adaptive.final_state is not None
    disagreement = mixed_error_norm(
        adaptive.final_state.stacked(), extrapolated.stacked(), system.typical_size
    )
    if disagreement > threshold:
        raise ReferenceFailureError(system.name, disagreement, threshold)
    logger.info("reference %s at t=%g certified to %.2e", system.name, t_end, disagreement)
    reference = Reference(adaptive.final_state, disagreement)
    if key is not None:
        with _reference_lock:
            _reference_cache[key] = reference
    return reference


def clear_reference_cache() -> None:
    with _reference_lock:
        _reference_cache.clear()


def _final_error(system: PartitionedSystem, record: RunRecord, reference: SplitState) -> float:
    assert record.final_state is not None
    return mixed_error_norm(
        record.final_state.stacked(), reference.stacked(), system.typical_size
    )


def loglog_slope(h: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(h); nan with fewer than two usable points."""
    pairs = [(hi, ei) for hi, ei in zip(h, errors) if ei > 0.0 and math.isfinite(ei)]
    if len(pairs) < 2:
        return math.nan
    log_h, log_e = np.log([p[0] for p in pairs]), np.log([p[1] for p in pairs])
    return float(np.polyfit(log_h, log_e, 1)[0])


def halving_steps(t_span: float, k_first: int, count: int) -> list[float]:
    """h = t_span / 2^k for k = k_first .. k_first + count - 1."""
    return [t_span / 2.0**k for k in range(k_first, k_first + count)]


def convergence_study(
    case: ModelCase,
    method: ConstantMethod,
    step_list: Sequence[float],
    reference: Optional[SplitState] = None,
    cfg: Optional[SolverConfig] = None,
) -> ConvergenceTable:
    """Final-time errors of constant-step runs and the observed order."""
    if any(later >= earlier for earlier, later in zip(step_list, step_list[1:])):
        raise PreconditionError("step_list must be strictly decreasing")
    span = case.t_end - case.initial.t
    if reference is None:
        reference = reference_solution(case).state
    cfg = (cfg or SolverConfig()).model_copy(update={"keep_trajectory": False})
    points: list[ConvergencePoint] = []
    for h in step_list:
        n_steps = round(span / h)
        if n_steps < 1 or abs(n_steps * h - span) > 1e-12 * span:
            raise PreconditionError(f"h = {h!r} does not divide the interval {span!r}")
        record = integrate_constant(case.system, case.initial, case.t_end, n_steps, method, cfg)
        error = _final_error(case.system, record, reference)
        points.append(
            ConvergencePoint(
                h=h, n_steps=n_steps, fevals=record.counter.fevals, final_error=error
            )
        )
        logger.info("%s/%s h=%.4g: error %.3e", case.system.name, method, h, error)
    slope = loglog_slope([p.h for p in points], [p.final_error for p in points])
    return ConvergenceTable(
        model=case.name,
        method=method,
        assignment=case.assignment,
        points=points,
        slope=slope,
    )


def _sweep_point(
    case: ModelCase,
    method: AdaptiveMethod,
    tol: float,
    reference: SplitState,
    cfg: SolverConfig,
) -> WorkPrecisionPoint:
    common = dict(model=case.name, method=method, assignment=case.assignment, tol=tol)
    try:
        record = integrate_adaptive(
            case.system, case.initial, case.t_end, ToleranceSpec(rel_tol=tol), method, cfg
        )
    except ParthinesError as exc:
        logger.warning("%s/%s TOL=%.3g failed: %s", case.system.name, method, tol, exc)
        return WorkPrecisionPoint(
            **common,
            fevals=0.0,
            jacevals=0,
            accepted=0,
            rejected=0,
            final_error=math.nan,
            failed=True,
            message=exc.detail,
        )
    counter = record.counter
    return WorkPrecisionPoint(
        **common,
        fevals=counter.fevals,
        jacevals=counter.jacobian_evals,
        accepted=counter.steps_accepted,
        rejected=counter.steps_rejected,
        final_error=_final_error(case.system, record, reference),
    )


def run_sweep(
    spec: SweepSpec,
    case: Optional[ModelCase] = None,
    reference: Optional[SplitState] = None,
    threads: Optional[int] = None,
    cfg: Optional[SolverConfig] = None,
) -> list[WorkPrecisionPoint]:
    """One point per (method, TOL), ordered by method then by position in tol_list."""
    case = case or resolve_model(spec.model, spec.assignment)
    if reference is None:
        reference = reference_solution(case).state
    cfg = (cfg or SolverConfig()).model_copy(update={"keep_trajectory": False})
    jobs = [(method, tol) for method in spec.methods for tol in spec.tol_list]
    workers = threads or settings.threads
    logger.info("sweep %s: %d runs on %d thread(s)", case.system.name, len(jobs), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        points = list(
            pool.map(lambda job: _sweep_point(case, job[0], job[1], reference, cfg), jobs)
        )
    for point in points:
        if not point.failed and point.final_error > spec.error_envelope * point.tol:
            logger.warning(
                "%s/%s TOL=%.3g: error %.3e exceeds %g x TOL",
                point.model,
                point.method,
                point.tol,
                point.final_error,
                spec.error_envelope,
            )
    return points


# ---------------------------------------------------------------- CSV output
def _fmt(value: float) -> str:
    return format(value, FLOAT_FORMAT)


def write_sweep_csv(points: Iterable[WorkPrecisionPoint], out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for p in points:
        writer.writerow(
            [
                p.model,
                p.method,
                p.assignment,
                _fmt(p.tol),
                _fmt(p.fevals),
                p.jacevals,
                p.accepted,
                p.rejected,
                _fmt(p.final_error),
                "true" if p.failed else "false",
            ]
        )


def write_convergence_csv(table: ConvergenceTable, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ("model", "method", "assignment", "h", "n_steps", "fevals", "final_error", "slope")
    )
    for p in table.points:
        writer.writerow(
            [
                table.model,
                table.method,
                table.assignment,
                _fmt(p.h),
                p.n_steps,
                _fmt(p.fevals),
                _fmt(p.final_error),
                _fmt(table.slope),
            ]
        )


def thin_indices(n_rows: int, max_rows: Optional[int]) -> np.ndarray:
    """Evenly spread row indices, always keeping the first and last row."""
    if max_rows is None or n_rows <= max_rows:
        return np.arange(n_rows)
    return np.unique(np.linspace(0, n_rows - 1, max(max_rows, 2)).round().astype(int))


def write_trajectory_csv(
    record: RunRecord,
    system: PartitionedSystem,
    out: TextIO,
    max_rows: Optional[int] = MAX_TRAJECTORY_ROWS,
) -> None:
    """Columns t and every component, voltages first regardless of the block assignment."""
    names = list(system.component_names) or [f"z{i}" for i in range(system.nx + system.ny)]
    if system.canonical_index is not None:
        names = [names[int(i)] for i in system.canonical_index]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", *names])
    for i in thin_indices(len(record.times), max_rows):
        z = system.to_canonical(record.samples[i])
        writer.writerow([_fmt(record.times[i]), *(_fmt(v) for v in z)])
