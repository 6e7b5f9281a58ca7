"""Initial value problems ``u' = f(t, u), u(0) = u0`` and the benchmark set.

Right-hand sides are vectorized over a leading axis: ``f(t, u)`` receives
``t`` of shape ``(q,)`` and ``u`` of shape ``(q, d)`` and returns ``(q, d)``;
a Jacobian returns ``(q, d, d)``; an exact solution maps ``(q,)`` to
``(q, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

RhsFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class OdeProblem:
    name: str
    dim: int
    f: RhsFn
    u0: np.ndarray
    horizon: float
    jacobian: Optional[RhsFn] = None
    exact: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lipschitz_L: Optional[float] = None
    bound_CA: Optional[float] = None

    def __post_init__(self):
        u0 = np.array(self.u0, dtype=float).reshape(-1)
        if u0.size != self.dim:
            raise ValueError(f"u0 has {u0.size} entries, dim is {self.dim}")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        for name in ("lipschitz_L", "bound_CA"):
            val = getattr(self, name)
            if val is not None and val < 0:
                raise ValueError(f"{name} must be >= 0")
        u0.flags.writeable = False
        object.__setattr__(self, "u0", u0)
        if self.exact is not None:
            mismatch = np.max(np.abs(self.exact(np.zeros(1))[0] - u0))
            if mismatch > 1e-12:
                raise ValueError(
                    f"exact(0) differs from u0 by {mismatch:.3e}")

    @property
    def constants_known(self) -> bool:
        return self.lipschitz_L is not None and self.bound_CA is not None


def _col(x):
    return np.asarray(x, dtype=float)[:, None]


def example1() -> OdeProblem:
    """``u' = -sin(u)``, ``u(0) = pi/2`` on (0, 1); ``u = 2 arctan(e^-t)``."""
    return OdeProblem(
        name="ex1",
        dim=1,
        f=lambda t, u: -np.sin(u),
        jacobian=lambda t, u: -np.cos(u)[:, :, None],
        exact=lambda t: _col(2.0 * np.arctan(np.exp(-np.asarray(t)))),
        u0=[np.pi / 2],
        horizon=1.0,
        lipschitz_L=1.0,
        bound_CA=1.0,
    )


def example2() -> OdeProblem:
    """``u' = -2 t u^2``, ``u(0) = 1``; ``u = 1/(1+t^2)``.

    Not globally Lipschitz, so no constants are attached.
    """
    return OdeProblem(
        name="ex2",
        dim=1,
        f=lambda t, u: -2.0 * np.asarray(t)[:, None] * u**2,
        jacobian=lambda t, u: (-4.0 * np.asarray(t)[:, None] * u)[:, :, None],
        exact=lambda t: _col(1.0 / (1.0 + np.asarray(t) ** 2)),
        u0=[1.0],
        horizon=1.0,
    )


def _ex3_rhs(t, u):
    u1, u2 = u[:, 0], u[:, 1]
    return np.stack([-u2 / (1.0 + u2**2), -np.tan(u1)], axis=1)


def _ex3_jac(t, u):
    u1, u2 = u[:, 0], u[:, 1]
    jac = np.zeros((u.shape[0], 2, 2))
    jac[:, 0, 1] = (u2**2 - 1.0) / (1.0 + u2**2) ** 2
    jac[:, 1, 0] = -1.0 / np.cos(u1) ** 2
    return jac


def _ex3_exact(t):
    e = np.exp(-np.asarray(t, dtype=float))
    return np.stack([np.arctan(e), e], axis=1)


def example3() -> OdeProblem:
    """Planar system with exact solution ``(arctan(e^-t), e^-t)``."""
    return OdeProblem(
        name="ex3",
        dim=2,
        f=_ex3_rhs,
        jacobian=_ex3_jac,
        exact=_ex3_exact,
        u0=[np.pi / 4, 1.0],
        horizon=1.0,
    )


def linear(lam: float = -1.0, u0: float = 1.0, T: float = 1.0) -> OdeProblem:
    """Scalar test equation ``u' = lam * u``."""
    return OdeProblem(
        name=f"linear({lam:g})",
        dim=1,
        f=lambda t, u: lam * u,
        jacobian=lambda t, u: np.full((u.shape[0], 1, 1), lam),
        exact=lambda t: _col(u0 * np.exp(lam * np.asarray(t))),
        u0=[u0],
        horizon=T,
        lipschitz_L=abs(lam),
        bound_CA=abs(lam),
    )


def zero(dim: int = 1, u0=None, T: float = 1.0) -> OdeProblem:
    """``u' = 0``; the solution is the constant ``u0``."""
    u0 = np.ones(dim) if u0 is None else np.asarray(u0, dtype=float)
    return OdeProblem(
        name="zero",
        dim=dim,
        f=lambda t, u: np.zeros_like(u),
        jacobian=lambda t, u: np.zeros((u.shape[0], dim, dim)),
        exact=lambda t: np.broadcast_to(u0, (np.size(t), dim)).copy(),
        u0=u0,
        horizon=T,
        lipschitz_L=0.0,
        bound_CA=0.0,
    )


def polynomial(coeffs, T: float = 1.0) -> OdeProblem:
    """``u' = p'(t)`` with ``u(0) = p(0)`` for the scalar polynomial
    ``p(t) = sum_j coeffs[j] t^j``; the right-hand side ignores ``u``.
    """
    p = np.polynomial.Polynomial(coeffs)
    dp = p.deriv()
    return OdeProblem(
        name=f"poly{p.degree()}",
        dim=1,
        f=lambda t, u: dp(np.asarray(t))[:, None] + 0.0 * u,
        jacobian=lambda t, u: np.zeros((u.shape[0], 1, 1)),
        exact=lambda t: _col(p(np.asarray(t))),
        u0=[p(0.0)],
        horizon=T,
        lipschitz_L=0.0,
        bound_CA=0.0,
    )


PROBLEMS = {
    "ex1": example1,
    "ex2": example2,
    "ex3": example3,
}


def get_problem(name: str) -> OdeProblem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}"
        ) from None
