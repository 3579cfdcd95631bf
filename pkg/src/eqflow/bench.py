"""Benchmark harness: run the solver (and optionally a projected-gradient
baseline) over the problem catalog and emit rows as a table, CSV, or JSON.

Exit codes: 0 when every selected solve converged, 1 when any run fell short
(iteration cap, step failure, or an internal solver error), 2 on usage errors
such as unknown problem names or invalid flag combinations.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, EqflowError, UnknownProblem
from .problems import (
    CONVEX_PROBLEMS,
    NONCONVEX_PROBLEMS,
    ProblemInstance,
    get_problem,
)
from .projection import factor, project_gradient, restore_feasibility
from .solver import (
    CONVERGED,
    IterationRecord,
    MAX_ITERATIONS,
    SINGLE_FEASIBLE_POINT,
    STEP_FAILURE,
    SolverConfig,
    SolverReport,
    solve,
)

__all__ = ["RunSpec", "BenchRow", "run", "baseline_projected_gradient", "main"]

_SETS = {
    "all-convex": CONVEX_PROBLEMS,
    "all-nonconvex": NONCONVEX_PROBLEMS,
    "all": CONVEX_PROBLEMS + NONCONVEX_PROBLEMS,
}

_CSV_HEADER = ["problem", "n", "m", "solver", "steps", "time_s", "f_star", "kkt", "feas", "status"]

_SUCCESS_STATUSES = {CONVERGED, SINGLE_FEASIBLE_POINT}

#: Give up on a baseline backtracking search after this many halvings.
_MAX_HALVINGS = 60


@dataclass(frozen=True)
class RunSpec:
    """Everything one benchmark invocation needs."""

    problems: tuple[str, ...]
    n: Optional[int] = None
    config: SolverConfig = field(default_factory=SolverConfig)
    format: str = "table"
    out: Optional[str] = None
    baseline: bool = False
    trace: bool = False
    jobs: int = 1


@dataclass(frozen=True)
class BenchRow:
    """One output row; field order matches the CSV header."""

    problem: str
    n: int
    m: int
    solver: str
    steps: int
    time_s: float
    f_star: float
    kkt: float
    feas: float
    status: str


def baseline_projected_gradient(
    problem: ProblemInstance, config: Optional[SolverConfig] = None
) -> SolverReport:
    """Reference method: steepest descent along the projected gradient with
    backtracking halving until the Armijo condition
    ``f(x + a*d) <= f(x) + 1e-4 * a * g^T d`` holds.

    Shares the solver's termination criteria and caps; every step lies in the
    null space of the constraint matrix, so feasibility is conserved the same
    way.
    """
    cfg = config if config is not None else SolverConfig()
    cs = problem.cs
    t_start = time.perf_counter()
    counters = {"f": 0, "g": 0}

    def fval(x):
        counters["f"] += 1
        return float(problem.f(x))

    def gval(x):
        counters["g"] += 1
        return np.asarray(problem.grad(x), dtype=float)

    basis = factor(cs, cfg.rank_tol)
    x = restore_feasibility(basis, np.asarray(problem.x0, dtype=float))
    f = fval(x)
    g = gval(x)
    pg = project_gradient(basis, g)

    def report(status, k, accepted, trace):
        return SolverReport(
            status=status,
            x_star=x,
            f_star=f,
            kkt=float(np.max(np.abs(pg))) if pg.size else 0.0,
            feas=float(np.max(np.abs(cs.a @ x - cs.b))),
            iterations=k,
            accepted_steps=accepted,
            objective_evals=counters["f"],
            gradient_evals=counters["g"],
            hessian_evals=0,
            wall_time=time.perf_counter() - t_start,
            trace=trace,
        )

    if basis.rank == cs.n:
        return report(SINGLE_FEASIBLE_POINT, 0, 0, [])

    trace: list[IterationRecord] = []
    k = 0
    while True:
        if float(np.max(np.abs(pg))) <= cfg.tol:
            return report(CONVERGED, k, k, trace)
        if k >= cfg.max_iter:
            return report(MAX_ITERATIONS, k, k, trace)
        k += 1
        t_iter = time.perf_counter_ns()
        d = -pg
        slope = float(g @ d)
        alpha = 1.0
        for _ in range(_MAX_HALVINGS):
            x_trial = x + alpha * d
            f_trial = fval(x_trial)
            if f_trial <= f + 1e-4 * alpha * slope:
                break
            alpha *= 0.5
        else:
            return report(STEP_FAILURE, k, k - 1, trace)
        s = alpha * d
        decrease = -alpha * slope
        rho = (f - f_trial) / decrease if decrease > 0 else float("-inf")
        x, f = x_trial, f_trial
        g = gval(x)
        pg = project_gradient(basis, g)
        trace.append(
            IterationRecord(
                k=k,
                f=f,
                kkt=float(np.max(np.abs(pg))),
                feas=float(np.max(np.abs(cs.a @ x - cs.b))),
                dt=alpha,
                rho=rho,
                accepted=True,
                phase="baseline",
                hessian_rebuilt=False,
                wall_time_ns=time.perf_counter_ns() - t_iter,
                decrease=decrease,
                step_norm=float(np.linalg.norm(s)),
                pg_norm=float(np.linalg.norm(d)),
                step_infeas=float(np.max(np.abs(cs.a @ s))),
            )
        )


def _make_row(problem: ProblemInstance, solver_name: str, rep: SolverReport) -> BenchRow:
    return BenchRow(
        problem=problem.name,
        n=problem.n,
        m=problem.cs.m,
        solver=solver_name,
        steps=rep.iterations,
        time_s=rep.wall_time,
        f_star=rep.f_star,
        kkt=rep.kkt,
        feas=rep.feas,
        status=rep.status,
    )


def _render_table(rows: list[BenchRow]) -> str:
    header = _CSV_HEADER
    cells = [header]
    for row in rows:
        cells.append(
            [
                row.problem,
                str(row.n),
                str(row.m),
                row.solver,
                str(row.steps),
                f"{row.time_s:.3f}",
                f"{row.f_star:.6g}",
                f"{row.kkt:.3e}",
                f"{row.feas:.3e}",
                row.status,
            ]
        )
    widths = [max(len(line[i]) for line in cells) for i in range(len(header))]
    lines = []
    for idx, line in enumerate(cells):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(line, widths)).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _render_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                row.problem,
                row.n,
                row.m,
                row.solver,
                row.steps,
                repr(row.time_s),
                repr(row.f_star),
                repr(row.kkt),
                repr(row.feas),
                row.status,
            ]
        )
    return buf.getvalue()


def _render_json(
    rows: list[BenchRow], traces: list[Optional[list[IterationRecord]]], include_trace: bool
) -> str:
    payload = []
    for row, trace in zip(rows, traces):
        entry = asdict(row)
        if include_trace:
            entry["trace"] = [asdict(rec) for rec in (trace or [])]
        payload.append(entry)
    return json.dumps(payload, indent=2) + "\n"


def run(spec: RunSpec) -> int:
    """Execute the runs described by ``spec``; returns the process exit code."""
    if spec.format not in ("table", "json", "csv"):
        print(f"error: unknown format {spec.format!r}", file=sys.stderr)
        return 2
    if spec.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    names: list[str] = []
    for name in spec.problems:
        names.extend(_SETS.get(name, (name,)))
    try:
        problems = [get_problem(name, n=spec.n) for name in names]
    except (UnknownProblem, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    def solve_one(problem: ProblemInstance) -> list[tuple[BenchRow, list[IterationRecord]]]:
        rep = solve(problem, spec.config)
        out = [(_make_row(problem, "continuation", rep), rep.trace)]
        if spec.baseline:
            rep_b = baseline_projected_gradient(problem, spec.config)
            out.append((_make_row(problem, "projected-gradient", rep_b), rep_b.trace))
        return out

    try:
        if spec.jobs > 1:
            with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
                nested = list(pool.map(solve_one, problems))
        else:
            nested = [solve_one(p) for p in problems]
    except EqflowError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    rows = [row for group in nested for row, _ in group]
    traces = [trace for group in nested for _, trace in group]

    if spec.format == "table":
        text = _render_table(rows)
    elif spec.format == "csv":
        text = _render_csv(rows)
    else:
        text = _render_json(rows, traces, spec.trace)

    if spec.out:
        with open(spec.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    converged = sum(1 for row in rows if row.status in _SUCCESS_STATUSES)
    print(f"{converged}/{len(rows)} runs converged", file=sys.stderr)
    return 0 if converged == len(rows) else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqflow-bench",
        description=(
            "Run the equality-constrained continuation solver over the "
            "benchmark catalog."
        ),
    )
    parser.add_argument(
        "--problem",
        action="append",
        default=None,
        metavar="NAME",
        help=(
            "problem name, comma-separated names, or one of the sets "
            "'all-convex', 'all-nonconvex', 'all' (repeatable; default: all)"
        ),
    )
    parser.add_argument("--n", type=int, default=None, help="dimension override")
    parser.add_argument("--max-iter", type=int, default=None, help="iteration cap")
    parser.add_argument("--tol", type=float, default=None, help="stopping tolerance")
    parser.add_argument(
        "--sigma0", type=float, default=None, help="regularization shift scale"
    )
    parser.add_argument("--dt0", type=float, default=None, help="initial time step")
    parser.add_argument(
        "--format", choices=("table", "json", "csv"), default="table", help="output format"
    )
    parser.add_argument("--out", default=None, help="write output to this path")
    parser.add_argument(
        "--baseline",
        action="store_true",
        help="also run the projected-gradient baseline on each problem",
    )
    parser.add_argument(
        "--trace",
        action="store_true",
        help="include per-iteration traces (JSON format only)",
    )
    parser.add_argument("--jobs", type=int, default=1, help="parallel solves")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {}
    if args.max_iter is not None:
        overrides["max_iter"] = args.max_iter
    if args.tol is not None:
        overrides["tol"] = args.tol
    if args.sigma0 is not None:
        overrides["reg_shift"] = args.sigma0
    if args.dt0 is not None:
        overrides["dt0"] = args.dt0
    try:
        config = SolverConfig(**overrides)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    problems = tuple(
        part
        for chunk in (args.problem or ["all"])
        for part in chunk.split(",")
        if part
    )
    if not problems:
        print("error: --problem expanded to an empty list", file=sys.stderr)
        return 2
    spec = RunSpec(
        problems=problems,
        n=args.n,
        config=config,
        format=args.format,
        out=args.out,
        baseline=args.baseline,
        trace=args.trace,
        jobs=args.jobs,
    )
    return run(spec)
