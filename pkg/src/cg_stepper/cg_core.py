"""Continuous Galerkin time stepping for ``u' = f(t, u)``.

On every interval ``I_n`` the discrete solution is a polynomial of degree
``r_n`` whose left value is inherited from the previous interval; the
remaining ``r_n`` nodal values are fixed by requiring that the residual
``u' - f(t, u)`` be orthogonal to all polynomials of degree ``r_n - 1``.
The resulting nonlinear system is solved by the update loop

    -G_A(U_0) delta_j = G(U_j),    U_{j+1} = U_j + delta_j,

where ``G`` is the local residual and ``G_A`` its linearization with a
matrix map ``A``: ``A = 0`` (Picard), ``A = f_u`` frozen at the initial
iterate (simplified Newton), or ``A = f_u`` at the current iterate (full
Newton).
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .partition import TimePartition
from .polyspace import ReferenceBasis, build_basis, eval_piecewise
from .problem import OdeProblem

logger = logging.getLogger(__name__)

#: Sharp Poincare constant for H^1 functions vanishing at one end of an
#: interval of unit length: ||u|| <= k * (2/pi) * ||u'||.
POINCARE_CONSTANT = 2.0 / math.pi

_PIVOT_RTOL = 1e-14


class SolverError(RuntimeError):
    """Base class for failures of the discrete solve."""


class SingularOperatorError(SolverError):
    def __init__(self, message, index=None, step=None):
        super().__init__(message)
        self.index = index
        self.step = step


class NonFiniteError(SolverError):
    def __init__(self, index, t):
        super().__init__(
            f"right-hand side is not finite on interval {index} at t={t!r}")
        self.index = index
        self.t = t


class ConvergenceError(SolverError):
    def __init__(self, index, history, config):
        super().__init__(
            f"{config.scheme.value} iteration did not converge on interval "
            f"{index} within {config.max_iter} iterations; "
            f"last update norms: {', '.join(f'{h:.3e}' for h in history[-5:])}")
        self.index = index
        self.history = list(history)


class StepBoundWarning(UserWarning):
    """A step exceeds the sufficient step-size bound for contraction."""


class Scheme(str, enum.Enum):
    PICARD = "picard"
    SIMPLIFIED_NEWTON = "snewton"
    FULL_NEWTON = "newton"


@dataclass(frozen=True)
class IterationConfig:
    scheme: Scheme = Scheme.SIMPLIFIED_NEWTON
    tol_abs: float = 1e-14
    tol_rel: float = 0.0
    max_iter: int = 100
    quad_points: Optional[int] = None
    enforce_step_bound: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if self.tol_abs < 0 or self.tol_rel < 0:
            raise ValueError("tolerances must be non-negative")
        if self.tol_abs == 0 and self.tol_rel == 0:
            raise ValueError("tol_abs and tol_rel cannot both be zero")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.quad_points is not None and self.quad_points < 1:
            raise ValueError("quad_points must be >= 1")

    def quad_for(self, r: int) -> int:
        return r + 2 if self.quad_points is None else self.quad_points


@dataclass
class StepReport:
    index: int
    iterations: int
    update_norm: float
    converged: bool
    ratios: list = field(default_factory=list)
    history: list = field(default_factory=list)


@dataclass
class CgSolution:
    """Globally continuous piecewise polynomial.

    ``blocks[n]`` has shape ``(r_n + 1, d)`` and holds the values at the
    Gauss-Lobatto nodes mapped to interval ``n``; its first row is a copy
    of the last row of ``blocks[n-1]``.
    """

    partition: TimePartition
    blocks: list

    @property
    def dim(self) -> int:
        return self.blocks[0].shape[1]

    def __call__(self, t):
        return eval_piecewise(self, t)

    def nodal_values(self) -> np.ndarray:
        """Values at ``t_0, ..., t_N``, shape ``(N+1, d)``."""
        return np.vstack([self.blocks[0][:1]] + [b[-1:] for b in self.blocks])

    @property
    def final_value(self) -> np.ndarray:
        return self.blocks[-1][-1].copy()


# -- assembly ---------------------------------------------------------------

def _quad_times(basis, interval):
    a, b = interval
    return a + (basis.quadrature.points + 1.0) * (0.5 * (b - a))


def _check_finite(values, times, index):
    if not np.all(np.isfinite(values)):
        bad = np.nonzero(~np.all(np.isfinite(values.reshape(len(times), -1)),
                                 axis=1))[0][0]
        raise NonFiniteError(index, float(times[bad]))


def assemble_residual(basis: ReferenceBasis, interval, u_block, problem,
                      index=0) -> np.ndarray:
    """Local residual ``<G(u), P_i> = int_I (u' - f(t, u)) P_i dt``.

    Returns a flat vector of length ``r*d`` ordered test-function major,
    i.e. entry ``i*d + a`` tests component ``a`` against ``P_i``.
    """
    a, b = interval
    half = 0.5 * (b - a)
    t = _quad_times(basis, interval)
    u_q = basis.trial_values_at_quad @ u_block
    f_q = np.asarray(problem.f(t, u_q), dtype=float)
    _check_finite(f_q, t, index)
    # d/dt = (1/half) d/dx and dt = half dx, so the derivative term is unscaled
    # differences against the left value keep constants exactly in the kernel
    integrand = (basis.trial_derivs_at_quad @ (u_block - u_block[0])
                 - half * f_q)
    return (basis.weighted_test @ integrand).ravel()


def assemble_linearized(basis: ReferenceBasis, interval, a_eval, u_block,
                        index=0) -> np.ndarray:
    """Matrix of ``<G_A(u) psi_m, P_i>`` on trial functions vanishing at the
    left endpoint.

    ``a_eval(t, u)`` returns the matrices ``A(t_q, u(t_q))`` with shape
    ``(q, d, d)``; ``None`` stands for ``A = 0``. Rows and columns are
    ordered like :func:`assemble_residual` (column ``(m-1)*d + b`` is the
    ``m``-th nodal function in direction ``b``).
    """
    r = basis.order
    d = u_block.shape[1]
    mat = basis.derivative_coupling
    if d > 1:
        mat = np.kron(mat, np.eye(d))
    if a_eval is None:
        return mat.copy()
    a, b = interval
    t = _quad_times(basis, interval)
    u_q = basis.trial_values_at_quad @ u_block
    A = np.asarray(a_eval(t, u_q), dtype=float).reshape(t.size, d, d)
    _check_finite(A, t, index)
    W = basis.weighted_test
    V = basis.trial_values_at_quad[:, 1:]
    if d == 1:
        coupling = (W * A[:, 0, 0]) @ V
    else:
        coupling = np.einsum("iq,qab,qm->iamb", W, A, V).reshape(r * d, r * d)
    return mat - 0.5 * (b - a) * coupling


# -- dense linear algebra ---------------------------------------------------

def _inf_norm(M):
    return float(np.max(np.sum(np.abs(M), axis=1))) if M.size else 0.0


def lu_factor(M, scale=None):
    """LU factorization with partial pivoting.

    Raises :class:`SingularOperatorError` if a pivot falls below
    ``1e-14 * scale``; ``scale`` defaults to ``||M||_inf``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if scale is None:
        scale = _inf_norm(M)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    pivot = np.min(np.abs(np.diag(lu))) if M.size else 0.0
    if not pivot > _PIVOT_RTOL * scale:
        raise SingularOperatorError(
            f"matrix is numerically singular (pivot {pivot:.3e}, "
            f"scale {scale:.3e})")
    return lu, piv


def lu_solve(factors, rhs):
    return scipy.linalg.lu_solve(factors, rhs, check_finite=False)


def dense_solve(M, rhs) -> np.ndarray:
    """Solve ``M x = rhs``; raises :class:`SingularOperatorError` on a
    vanishing pivot."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != np.shape(M)[0]:
        raise ValueError("right-hand side does not conform to the matrix")
    return lu_solve(lu_factor(M), rhs)


# -- contraction theory -----------------------------------------------------

def step_bound(L: float, C_A: float, C_P: float = POINCARE_CONSTANT) -> float:
    """Largest step size ``1 / ((2 C_A + L) C_P)`` for which the local
    iteration map is guaranteed to contract; ``inf`` if ``2 C_A + L = 0``.

    Pass ``C_A = 0`` for Picard iteration.
    """
    if L < 0 or C_A < 0:
        raise ValueError("L and C_A must be non-negative")
    if not C_P > 0:
        raise ValueError("C_P must be positive")
    s = 2.0 * C_A + L
    if s == 0:
        return math.inf
    return 1.0 / (s * C_P)


def contraction_bound(L: float, C_A: float, C_P: float, k: float) -> float:
    """Lipschitz constant ``(C_A + L) / ((k C_P)^-1 - C_A)`` of the local
    iteration map on an interval of length ``k``.

    Requires ``k < 1 / (C_A C_P)``, the condition under which the
    linearized operator is invertible.
    """
    if L < 0 or C_A < 0 or k < 0:
        raise ValueError("L, C_A and k must be non-negative")
    if not C_P > 0:
        raise ValueError("C_P must be positive")
    if k == 0:
        return 0.0
    kc = k * C_P
    if not C_A * kc < 1.0:
        raise ValueError(
            f"invertibility condition k < 1/(C_A C_P) violated: "
            f"k={k}, C_A={C_A}, C_P={C_P}")
    return (C_A + L) * kc / (1.0 - C_A * kc)


# -- solvers ----------------------------------------------------------------

def _frozen(a_eval, u_left):
    def frozen(t, u):
        return a_eval(t, np.broadcast_to(u_left, u.shape))
    return frozen


def solve_interval(basis: ReferenceBasis, interval, u_left, problem: OdeProblem,
                   config: IterationConfig, index=0):
    """Compute the cG block on one interval starting from ``u_left``.

    Returns ``(block, report)``. The first row of ``block`` is ``u_left``
    and is never touched by the iteration. When ``max_iter`` is exhausted
    the report has ``converged=False``; raising is left to the caller.
    """
    u_left = np.asarray(u_left, dtype=float).reshape(-1)
    if not np.all(np.isfinite(u_left)):
        raise NonFiniteError(index, interval[0])
    r = basis.order
    d = u_left.size
    scheme = config.scheme
    if scheme is not Scheme.PICARD and problem.jacobian is None:
        raise ValueError(f"scheme {scheme.value!r} needs a Jacobian")

    block = np.tile(u_left, (r + 1, 1))

    # cancellation between the derivative and the A-term is measured
    # against the A-independent part, which is never small
    scale = max(_inf_norm(basis.derivative_coupling), 1.0)

    def factor(A_eval, u_block):
        M = assemble_linearized(basis, interval, A_eval, u_block, index)
        try:
            return lu_factor(M, max(scale, _inf_norm(M)))
        except SingularOperatorError as exc:
            k = interval[1] - interval[0]
            raise SingularOperatorError(
                f"linearized operator singular on interval {index} "
                f"(k_n={k:.6g}): {exc}", index=index, step=k) from None

    if scheme is Scheme.PICARD:
        lu = factor(None, block)
    elif scheme is Scheme.SIMPLIFIED_NEWTON:
        lu = factor(_frozen(problem.jacobian, u_left), block)

    history = []
    ratios = []
    converged = False
    for _ in range(config.max_iter):
        if scheme is Scheme.FULL_NEWTON:
            lu = factor(problem.jacobian, block)
        res = assemble_residual(basis, interval, block, problem, index)
        delta = -lu_solve(lu, res)
        norm = float(np.max(np.abs(delta)))
        if not math.isfinite(norm):
            raise NonFiniteError(index, interval[0])
        threshold = config.tol_abs + config.tol_rel * float(np.max(np.abs(block)))
        block[1:] += delta.reshape(r, d)
        if history and history[-1] > 0:
            ratios.append(norm / history[-1])
        history.append(norm)
        if norm <= threshold:
            converged = True
            break

    report = StepReport(index=index, iterations=len(history),
                        update_norm=history[-1], converged=converged,
                        ratios=ratios, history=history)
    return block, report


def _check_steps(problem, partition, config):
    if not problem.constants_known:
        warnings.warn(
            f"step-size bound not checked for {problem.name}: Lipschitz or "
            "C_A constant unknown", StepBoundWarning, stacklevel=3)
        return
    C_A = 0.0 if config.scheme is Scheme.PICARD else problem.bound_CA
    bound = step_bound(problem.lipschitz_L, C_A)
    too_big = np.nonzero(partition.steps >= bound)[0]
    if too_big.size:
        warnings.warn(
            f"{too_big.size} of {partition.n_intervals} steps exceed the "
            f"sufficient contraction bound k < {bound:.6g} "
            f"(first: interval {too_big[0]}, k={partition.steps[too_big[0]]:.6g})",
            StepBoundWarning, stacklevel=3)


def solve(problem: OdeProblem, partition: TimePartition,
          config: IterationConfig | None = None):
    """March left to right over ``partition``.

    Returns ``(solution, reports)`` with one :class:`StepReport` per
    interval. Raises :class:`ConvergenceError` on the first interval that
    does not converge.
    """
    config = config or IterationConfig()
    T = problem.horizon
    if abs(partition.horizon - T) > 1e-12 * T:
        raise ValueError(
            f"partition ends at {partition.horizon}, problem horizon is {T}")
    if config.enforce_step_bound:
        _check_steps(problem, partition, config)

    blocks = []
    reports = []
    u_left = problem.u0.copy()
    for n in range(partition.n_intervals):
        r = int(partition.degrees[n])
        basis = build_basis(r, config.quad_for(r))
        block, report = solve_interval(basis, partition.interval(n), u_left,
                                       problem, config, index=n)
        if not report.converged:
            raise ConvergenceError(n, report.history, config)
        blocks.append(block)
        reports.append(report)
        u_left = block[-1].copy()
    logger.debug("solved %s on %s: %d iterations", problem.name,
                 partition.describe(), total_iterations(reports))
    return CgSolution(partition, blocks), reports


def total_iterations(reports) -> int:
    return sum(rep.iterations for rep in reports)
