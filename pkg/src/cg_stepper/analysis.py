"""Error norms, degree-of-freedom counts and empirical convergence orders."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .partition import TimePartition
from .polyspace import gauss_legendre, nodal_values_at


@dataclass(frozen=True)
class ConvergenceRow:
    elements: int
    degree: int
    dof: int
    l2_error: float
    linf_error: float
    eoc: Optional[float] = None
    iterations: int = 0
    scheme: str = ""
    problem: str = ""


def dof(partition: TimePartition, d: int) -> int:
    """Degrees of freedom ``d * sum(r_n)``."""
    return int(d * partition.degrees.sum())


def _pointwise_errors(sol, exact, points_for):
    """For each group of intervals sharing a degree ``r``, yield the group's
    interval indices and the error vectors at the reference points
    ``points_for(r)``, shape ``(intervals, points, d)``."""
    p = sol.partition
    for r in np.unique(p.degrees):
        r = int(r)
        x = np.asarray(points_for(r))
        idx = np.nonzero(p.degrees == r)[0]
        values = nodal_values_at(r, tuple(x))
        a = p.nodes[idx]
        half = 0.5 * (p.nodes[idx + 1] - a)
        t = a[:, None] + (x[None, :] + 1.0) * half[:, None]
        coeffs = np.stack([sol.blocks[n] for n in idx])
        approx = np.einsum("qm,nmd->nqd", values, coeffs)
        ref = np.asarray(exact(t.ravel()), dtype=float).reshape(approx.shape)
        yield idx, approx - ref


def l2_error(sol, exact, quad_boost: int = 5) -> float:
    """``||U - u||_{L^2(0,T)}`` with ``r_n + quad_boost`` Gauss points per
    interval."""
    nodes = sol.partition.nodes
    total = 0.0
    for idx, err in _pointwise_errors(
            sol, exact, lambda r: gauss_legendre(r + quad_boost).points):
        weights = gauss_legendre(err.shape[1]).weights
        half = 0.5 * (nodes[idx + 1] - nodes[idx])
        total += float(half @ (np.sum(err * err, axis=2) @ weights))
    return math.sqrt(total)


def linf_error(sol, exact, samples_per_interval: int = 50) -> float:
    """Maximum of ``||U(t) - u(t)||`` over an equispaced sample grid on each
    interval, endpoints included."""
    x = np.linspace(-1.0, 1.0, samples_per_interval)
    worst = 0.0
    for _, err in _pointwise_errors(sol, exact, lambda r: x):
        worst = max(worst, float(np.max(np.linalg.norm(err, axis=2))))
    return worst


def eoc(prev: ConvergenceRow, curr: ConvergenceRow) -> Optional[float]:
    """Empirical order ``log(e_prev / e_curr) / log(dof_curr / dof_prev)``.

    ``None`` when either error is zero or not finite.
    """
    if not curr.dof > prev.dof:
        raise ValueError("EOC needs strictly increasing degrees of freedom")
    e0, e1 = prev.l2_error, curr.l2_error
    if not (math.isfinite(e0) and math.isfinite(e1)) or e0 <= 0 or e1 <= 0:
        return None
    return math.log(e0 / e1) / math.log(curr.dof / prev.dof)
