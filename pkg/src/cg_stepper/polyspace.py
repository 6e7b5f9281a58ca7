"""Polynomial machinery on the reference interval [-1, 1].

Trial functions are Lagrange polynomials on the Gauss-Lobatto nodes, so the
first and last coefficient of a block are the values at the interval
endpoints. Test functions are the Legendre polynomials ``P_0 ... P_{r-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 100


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.points.size

    def mapped(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Points and weights transported to ``[a, b]``."""
        h = 0.5 * (b - a)
        return a + (self.points + 1.0) * h, self.weights * h


@dataclass(frozen=True)
class ReferenceBasis:
    """Precomputed trial/test tables for one degree and one quadrature rule.

    Shapes: ``trial_values_at_quad`` and ``trial_derivs_at_quad`` are
    ``(q, r+1)``; ``test_values_at_quad`` and ``weighted_test`` (the test
    values times the weights) are ``(r, q)``. ``derivative_coupling`` is the
    ``(r, r)`` matrix ``int psi_m' P_i dx`` over the trial functions that
    vanish at -1. Derivatives are with respect to the reference variable.
    """

    order: int
    trial_nodes: np.ndarray
    quadrature: QuadratureRule
    trial_values_at_quad: np.ndarray
    trial_derivs_at_quad: np.ndarray
    test_values_at_quad: np.ndarray
    weighted_test: np.ndarray
    derivative_coupling: np.ndarray


def legendre_eval(k: int, x):
    """Legendre polynomial ``P_k`` at ``x`` by the three-term recurrence."""
    if k < 0:
        raise ValueError(f"degree must be >= 0, got {k}")
    x = np.asarray(x, dtype=float)
    p_prev, p = np.ones_like(x), x.copy()
    if k == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    for n in range(1, k):
        p_prev, p = p, ((2 * n + 1) * x * p - n * p_prev) / (n + 1)
    return p if p.ndim else float(p)


def legendre_table(kmax: int, x) -> np.ndarray:
    """Rows ``P_0(x) ... P_kmax(x)``, shape ``(kmax+1, len(x))``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((kmax + 1, x.size))
    out[0] = 1.0
    if kmax >= 1:
        out[1] = x
    for n in range(1, kmax):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out


def _legendre_and_derivative(n, x):
    """``P_n(x)`` and ``P_n'(x)`` for ``x`` strictly inside (-1, 1)."""
    p_prev, p = np.ones_like(x), x.copy()
    for m in range(1, n):
        p_prev, p = p, ((2 * m + 1) * x * p - m * p_prev) / (m + 1)
    if n == 0:
        return np.ones_like(x), np.zeros_like(x)
    dp = n * (p_prev - x * p) / (1.0 - x * x)
    return p, dp


def _golub_welsch(q):
    k = np.arange(1, q)
    off = k / np.sqrt(4.0 * k * k - 1.0)
    return np.linalg.eigvalsh(np.diag(off, 1) + np.diag(off, -1))


@lru_cache(maxsize=None)
def _gauss_legendre(q):
    # Tricomi-type initial guess, descending order
    i = np.arange(1, q + 1)
    x = np.cos(np.pi * (i - 0.25) / (q + 0.5))
    for _ in range(_NEWTON_MAXIT):
        p, dp = _legendre_and_derivative(q, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= _NEWTON_TOL:
            break
    else:
        x = _golub_welsch(q)[::-1]
    x = np.sort(x)
    # symmetrize so that the rule is exactly odd-symmetric
    x = 0.5 * (x - x[::-1])
    _, dp = _legendre_and_derivative(q, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    w = 0.5 * (w + w[::-1])
    x.flags.writeable = False
    w.flags.writeable = False
    return QuadratureRule(x, w)


def gauss_legendre(q: int) -> QuadratureRule:
    """``q``-point Gauss-Legendre rule on [-1, 1], exact up to degree ``2q-1``."""
    if q < 1:
        raise ValueError(f"need at least one quadrature point, got q={q}")
    return _gauss_legendre(int(q))


@lru_cache(maxsize=None)
def _lobatto_nodes(r):
    if r == 1:
        x = np.array([-1.0, 1.0])
    else:
        # interior nodes: roots of P_r', started from Chebyshev-Lobatto points
        x = -np.cos(np.pi * np.arange(1, r) / r)
        for _ in range(_NEWTON_MAXIT):
            # (1-x^2) P_r'' = 2x P_r' - r(r+1) P_r
            p, dp = _legendre_and_derivative(r, x)
            d2p = (2.0 * x * dp - r * (r + 1) * p) / (1.0 - x * x)
            dx = dp / d2p
            x = x - dx
            if np.max(np.abs(dx)) <= _NEWTON_TOL:
                break
        x = np.sort(x)
        x = 0.5 * (x - x[::-1])
        x = np.concatenate(([-1.0], x, [1.0]))
    x.flags.writeable = False
    return x


def lobatto_nodes(r: int) -> np.ndarray:
    """The ``r+1`` Gauss-Lobatto points on [-1, 1], endpoints included."""
    if r < 1:
        raise ValueError(f"degree must be >= 1, got r={r}")
    return _lobatto_nodes(int(r))


def lagrange_tables(nodes: np.ndarray, x) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the Lagrange basis on ``nodes`` at ``x``.

    Returns two arrays of shape ``(len(x), len(nodes))``. Product form is
    used, so evaluating at a node gives exactly 0 or 1.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = nodes.size
    diff = x[:, None] - nodes[None, :]
    values = np.empty((x.size, n))
    derivs = np.zeros((x.size, n))
    for m in range(n):
        others = np.delete(np.arange(n), m)
        denom = np.prod(nodes[m] - nodes[others])
        values[:, m] = np.prod(diff[:, others], axis=1) / denom
        for j in others:
            rest = others[others != j]
            derivs[:, m] += np.prod(diff[:, rest], axis=1)
        derivs[:, m] /= denom
    return values, derivs


@lru_cache(maxsize=None)
def nodal_values_at(r: int, x: tuple) -> np.ndarray:
    """Cached Lagrange value table of degree ``r`` at the points ``x``."""
    values, _ = lagrange_tables(lobatto_nodes(r), np.array(x))
    values.flags.writeable = False
    return values


@lru_cache(maxsize=None)
def _build_basis(r, q):
    rule = gauss_legendre(q)
    nodes = lobatto_nodes(r)
    values, derivs = lagrange_tables(nodes, rule.points)
    test = legendre_table(r - 1, rule.points)
    weighted = test * rule.weights
    coupling = weighted @ derivs[:, 1:]
    for a in (values, derivs, test, weighted, coupling):
        a.flags.writeable = False
    return ReferenceBasis(r, nodes, rule, values, derivs, test, weighted,
                          coupling)


def build_basis(r: int, q: int | None = None) -> ReferenceBasis:
    """Reference tables for degree ``r`` with a ``q``-point rule (default ``r+2``).

    ``q < r+1`` under-integrates the derivative coupling and is rejected.
    """
    if r < 1:
        raise ValueError(f"degree must be >= 1, got r={r}")
    q = r + 2 if q is None else int(q)
    if q < r + 1:
        raise ValueError(f"q={q} quadrature points are too few for degree {r}")
    return _build_basis(int(r), q)


def eval_piecewise(sol, t):
    """Evaluate a piecewise polynomial solution at time(s) ``t``.

    ``sol`` needs a ``partition`` and a list of ``blocks``, block ``n``
    holding the values at the Lobatto nodes mapped to interval ``n``.
    Returns shape ``(d,)`` for scalar ``t`` and ``(len(t), d)`` otherwise.
    """
    p = sol.partition
    scalar = np.ndim(t) == 0
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    T = p.horizon
    if np.any(ts < 0.0) or np.any(ts > T) or not np.all(np.isfinite(ts)):
        raise ValueError(f"evaluation time outside [0, {T}]")
    idx = np.clip(np.searchsorted(p.nodes, ts, side="right") - 1,
                  0, p.n_intervals - 1)
    d = sol.blocks[0].shape[1]
    out = np.empty((ts.size, d))
    for n in np.unique(idx):
        sel = idx == n
        a, b = p.interval(n)
        x = np.clip(2.0 * (ts[sel] - a) / (b - a) - 1.0, -1.0, 1.0)
        values, _ = lagrange_tables(lobatto_nodes(int(p.degrees[n])), x)
        out[sel] = values @ sol.blocks[n]
    return out[0] if scalar else out
