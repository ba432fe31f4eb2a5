#!/usr/bin/env python3
"""
Reproduce the benchmark experiments and write every table as CSV.

This script will:
1. Run constant-step convergence studies (hines, cmhines, pr) on both neuron models.
2. Run work-precision sweeps of modhines, modhext and modhnew for both block assignments.
3. Tabulate stability boundary step sizes on a grid of coupling parameters gamma.

Run with: ``uv run python scripts/reproduce_experiments.py --out results/``
(``--quick`` shrinks the grids for a smoke run).
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

# Allow importing the parthines package when running as a script.
project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from parthines.core.errors import ParthinesError  # noqa: E402
from parthines.models import MODEL_NAMES, model_case  # noqa: E402
from parthines.schemas.harness import SweepSpec, tolerance_grid  # noqa: E402
from parthines.schemas.models import BlockAssignment  # noqa: E402
from parthines.schemas.stability import TestSystemParams  # noqa: E402
from parthines.services.harness import (  # noqa: E402
    FLOAT_FORMAT,
    convergence_study,
    halving_steps,
    reference_solution,
    run_sweep,
    write_convergence_csv,
    write_sweep_csv,
)
from parthines.services.stability import stability_boundary_h  # noqa: E402

CONSTANT_METHODS = ("hines", "cmhines", "pr")
ADAPTIVE_METHODS = ["modhines", "modhext", "modhnew"]
# first halving exponent k0 per model: h = t_end / 2^k
FIRST_HALVING = {"hh": 8, "sds": 10}


def run_convergence(out_dir: Path, count: int) -> None:
    print("\n📉 Convergence studies")
    for name in MODEL_NAMES:
        case = model_case(name)
        reference = reference_solution(case).state
        steps = halving_steps(case.t_end - case.initial.t, FIRST_HALVING[name], count)
        for method in CONSTANT_METHODS:
            try:
                table = convergence_study(case, method, steps, reference=reference)
            except ParthinesError as exc:
                print(f"❌ {name}/{method}: {exc}")
                continue
            path = out_dir / f"converge_{name}_{method}.csv"
            with path.open("w", newline="", encoding="utf-8") as handle:
                write_convergence_csv(table, handle)
            print(f"✅ {name}/{method}: observed order {table.slope:.3f} -> {path.name}")


def run_sweeps(out_dir: Path, k_max: int, threads: int) -> None:
    print("\n⚖️  Work-precision sweeps")
    for name in MODEL_NAMES:
        for assignment in BlockAssignment:
            case = model_case(name, assignment)
            spec = SweepSpec(
                model=name,
                methods=ADAPTIVE_METHODS,
                assignment=assignment,
                tol_list=tolerance_grid(k_max),
            )
            points = run_sweep(spec, case=case, threads=threads)
            failed = sum(p.failed for p in points)
            path = out_dir / f"sweep_{name}_{assignment.value}.csv"
            with path.open("w", newline="", encoding="utf-8") as handle:
                write_sweep_csv(points, handle)
            print(f"✅ {name}[{assignment.value}]: {len(points)} points, {failed} failed")


def run_boundaries(out_dir: Path, mu: float, lam: float) -> None:
    print("\n🧮 Stability boundaries")
    path = out_dir / "stability_boundaries.csv"
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["mu", "lambda", "gamma", "h_discrete", "h_strang"])
        for gamma in -np.geomspace(1e-2, 1e3, 26):
            # a = 1, b chosen so that ab / (mu lambda) = gamma
            params = TestSystemParams(mu=mu, lam=lam, a=1.0, b=gamma * mu * lam)
            row = [params.mu, params.lam, params.gamma]
            row += [stability_boundary_h(params, m) for m in ("modified", "strang")]
            writer.writerow([format(v, FLOAT_FORMAT) for v in row])
    print(f"✅ boundary table -> {path.name}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="sweep worker threads")
    parser.add_argument("--quick", action="store_true", help="small grids for a smoke run")
    parser.add_argument("--mu", type=float, default=-1.0)
    parser.add_argument("--lambda", dest="lam", type=float, default=-10.0)
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    print(f"🚀 Writing experiment tables to {args.out.resolve()}")
    run_convergence(args.out, 3 if args.quick else 6)
    run_sweeps(args.out, 8 if args.quick else 48, args.threads)
    run_boundaries(args.out, args.mu, args.lam)
    print("\n🎉 Done!")


if __name__ == "__main__":
    main()
