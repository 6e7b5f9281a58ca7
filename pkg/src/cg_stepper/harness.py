"""h- and p-convergence sweeps, scheme comparison and table output."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from . import analysis
from .analysis import ConvergenceRow
from .cg_core import (IterationConfig, Scheme, SolverError, solve,
                      total_iterations)
from .partition import TimePartition, bisect, uniform, with_degree
from .problem import OdeProblem, get_problem

CSV_HEADER = ("elements", "degree", "dof", "l2_error", "linf_error", "eoc",
              "iterations", "scheme", "problem")

DEFAULT_P_MESHES = (2, 5, 10, 20, 50)
DEFAULT_P_DEGREES = tuple(range(1, 9))


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str = "ex1"
    mode: str = "h"
    degrees: Sequence[int] = (1,)
    elements: Sequence[int] = (1,)
    scheme: Scheme = Scheme.SIMPLIFIED_NEWTON
    tol_abs: float = 1e-14
    tol_rel: float = 0.0
    max_iter: int = 100
    quad: Optional[int] = None
    format: str = "csv"
    error_floor: float = 5e-14
    max_elements: int = 8192
    check_step_bound: bool = False

    def __post_init__(self):
        if self.mode not in ("h", "p", "single"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.format not in ("csv", "md"):
            raise ValueError(f"unknown format {self.format!r}")
        if not self.error_floor > 0:
            raise ValueError("error floor must be positive")
        if not self.degrees or min(self.degrees) < 1:
            raise ValueError("degrees must be >= 1")
        if not self.elements or min(self.elements) < 1:
            raise ValueError("element counts must be >= 1")
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "degrees", tuple(int(r) for r in self.degrees))
        object.__setattr__(self, "elements", tuple(int(n) for n in self.elements))

    def config(self, scheme: Optional[Scheme] = None) -> IterationConfig:
        return IterationConfig(scheme=scheme or self.scheme, tol_abs=self.tol_abs,
                               tol_rel=self.tol_rel, max_iter=self.max_iter,
                               quad_points=self.quad,
                               enforce_step_bound=self.check_step_bound)

    def resolve_problem(self) -> OdeProblem:
        return get_problem(self.problem)


class SweepError(RuntimeError):
    """A solver failure inside a sweep, tagged with the failing cell."""

    def __init__(self, elements, degree, cause):
        super().__init__(f"solve failed at N={elements}, r={degree}: {cause}")
        self.elements = elements
        self.degree = degree
        self.cause = cause


def thread_count() -> int:
    try:
        return max(0, int(os.environ.get("CG_STEPPER_THREADS", "0") or 0))
    except ValueError:
        return 0


def _map(fn, items):
    items = list(items)
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def measure(problem: OdeProblem, partition: TimePartition,
            config: IterationConfig, prev: Optional[ConvergenceRow] = None
            ) -> ConvergenceRow:
    """Solve once and return the resulting table row."""
    r = int(partition.degrees[0])
    try:
        sol, reports = solve(problem, partition, config)
    except SolverError as exc:
        raise SweepError(partition.n_intervals, r, exc) from exc
    row = ConvergenceRow(
        elements=partition.n_intervals,
        degree=r,
        dof=analysis.dof(partition, problem.dim),
        l2_error=analysis.l2_error(sol, problem.exact),
        linf_error=analysis.linf_error(sol, problem.exact),
        iterations=total_iterations(reports),
        scheme=config.scheme.value,
        problem=problem.name,
    )
    if prev is not None:
        row = dataclasses.replace(row, eoc=analysis.eoc(prev, row))
    return row


def _h_column(problem, spec, config, r):
    rows = []
    p = uniform(problem.horizon, 1, r)
    while True:
        prev = rows[-1] if rows else None
        row = measure(problem, p, config, prev)
        rows.append(row)
        if (row.l2_error < spec.error_floor
                or _saturated(prev, row)
                or 2 * p.n_intervals > spec.max_elements):
            return rows
        p = bisect(p)


def _saturated(prev, row):
    # refinement stopped paying off: rounding errors dominate
    return prev is not None and not row.l2_error < prev.l2_error


def run_h_sweep(spec: ExperimentSpec, scheme: Optional[Scheme] = None
                ) -> list[ConvergenceRow]:
    """Bisection sweep from one element, per degree in ``spec.degrees``.

    A column stops after the first row whose L2 error is below the floor
    or no smaller than the previous one, or when the next bisection would
    exceed ``spec.max_elements``.
    """
    problem = spec.resolve_problem()
    config = spec.config(scheme)
    cols = _map(lambda r: _h_column(problem, spec, config, r), spec.degrees)
    return [row for col in cols for row in col]


def _p_column(problem, spec, config, N, degrees):
    rows = []
    mesh = uniform(problem.horizon, N, degrees[0])
    for r in degrees:
        prev = rows[-1] if rows else None
        row = measure(problem, with_degree(mesh, r), config, prev)
        rows.append(row)
        if row.l2_error < spec.error_floor or _saturated(prev, row):
            break
    return rows


def run_p_sweep(spec: ExperimentSpec, scheme: Optional[Scheme] = None
                ) -> list[ConvergenceRow]:
    """Raise the degree over ``spec.degrees`` on each fixed mesh of
    ``spec.elements`` intervals, stopping a mesh once the floor is hit or
    the error stops decreasing."""
    problem = spec.resolve_problem()
    config = spec.config(scheme)
    degrees = sorted(spec.degrees)
    cols = _map(lambda N: _p_column(problem, spec, config, N, degrees),
                spec.elements)
    return [row for col in cols for row in col]


def run_single(spec: ExperimentSpec) -> list[ConvergenceRow]:
    problem = spec.resolve_problem()
    config = spec.config()
    cells = [(N, r) for r in spec.degrees for N in spec.elements]
    return _map(lambda c: measure(problem, uniform(problem.horizon, c[0], c[1]),
                                  config), cells)


def run_scheme_comparison(spec: ExperimentSpec
                          ) -> list[tuple[ConvergenceRow, ConvergenceRow]]:
    """Run the sweep with simplified Newton, then re-solve the same cells
    with Picard iteration. Returns ``(newton_row, picard_row)`` pairs."""
    problem = spec.resolve_problem()
    if problem.jacobian is None:
        raise ValueError(f"{problem.name} has no Jacobian")
    if spec.mode == "p":
        newton = run_p_sweep(spec, Scheme.SIMPLIFIED_NEWTON)
    elif spec.mode == "h":
        newton = run_h_sweep(spec, Scheme.SIMPLIFIED_NEWTON)
    else:
        newton = run_single(dataclasses.replace(
            spec, scheme=Scheme.SIMPLIFIED_NEWTON))
    config = spec.config(Scheme.PICARD)
    picard = []
    for row in newton:
        prev = picard[-1] if picard else None
        if prev is not None and not _same_column(spec.mode, prev, row):
            prev = None
        p = uniform(problem.horizon, row.elements, row.degree)
        picard.append(measure(problem, p, config, prev))
    return list(zip(newton, picard))


def _same_column(mode, a, b):
    if mode == "h":
        return a.degree == b.degree and a.elements < b.elements
    if mode == "p":
        return a.elements == b.elements and a.degree < b.degree
    return False


def run(spec: ExperimentSpec) -> list[ConvergenceRow]:
    if spec.mode == "h":
        return run_h_sweep(spec)
    if spec.mode == "p":
        return run_p_sweep(spec)
    return run_single(spec)


# -- output -----------------------------------------------------------------

def _sorted(rows):
    return sorted(rows, key=lambda row: (row.problem, row.scheme,
                                         row.degree, row.elements))


def _csv_field(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in _sorted(rows):
        writer.writerow([_csv_field(getattr(row, name)) for name in CSV_HEADER])
    return buf.getvalue()


def _fmt_error(e):
    return f"{e:.2e}" if math.isfinite(e) else "--"


def _fmt_eoc(v):
    return "--" if v is None else f"{v:.2f}"


def emit_markdown(rows, columns=("l2_error", "eoc")) -> str:
    """Tables with one line per element count and, for every degree, the
    requested columns (``l2_error``, ``eoc``, ``iterations``). Missing
    cells print as ``--``."""
    labels = {"l2_error": None, "eoc": "Ord.", "iterations": "It."}
    groups = {}
    for row in _sorted(rows):
        groups.setdefault((row.problem, row.scheme), []).append(row)
    out = []
    for (prob, scheme), grp in groups.items():
        degrees = sorted({row.degree for row in grp})
        elements = sorted({row.elements for row in grp})
        cell = {(row.elements, row.degree): row for row in grp}
        header = ["#el."]
        for r in degrees:
            header += [f"r={r}" if c == "l2_error" else labels[c] for c in columns]
        out.append(f"### {prob} ({scheme})")
        out.append("")
        out.append("| " + " | ".join(header) + " |")
        out.append("|" + "|".join("---" for _ in header) + "|")
        for N in elements:
            line = [str(N)]
            for r in degrees:
                row = cell.get((N, r))
                for c in columns:
                    if row is None:
                        line.append("--")
                    elif c == "l2_error":
                        line.append(_fmt_error(row.l2_error))
                    elif c == "eoc":
                        line.append(_fmt_eoc(row.eoc))
                    else:
                        line.append(str(row.iterations))
            out.append("| " + " | ".join(line) + " |")
        out.append("")
    return "\n".join(out)


def emit(rows, format: str = "csv", columns=("l2_error", "eoc")) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to emit")
    if format == "csv":
        return emit_csv(rows)
    if format == "md":
        return emit_markdown(rows, columns)
    raise ValueError(f"unknown format {format!r}")
