"""Temporal meshes with per-interval polynomial degrees."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TimePartition:
    """Partition ``0 = t_0 < t_1 < ... < t_N = T`` with a degree ``r_n >= 1``
    attached to every interval ``(t_{n-1}, t_n)``.

    Both arrays are stored read-only, so a partition can be shared freely
    between concurrent solves.
    """

    nodes: np.ndarray
    degrees: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        degrees = np.array(self.degrees, dtype=int)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a partition needs at least two nodes")
        if degrees.shape != (nodes.size - 1,):
            raise ValueError(
                f"expected {nodes.size - 1} degrees, got {degrees.size}")
        if nodes[0] != 0.0:
            raise ValueError("first node must be 0")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(degrees < 1):
            raise ValueError("every degree must be >= 1")
        nodes.flags.writeable = False
        degrees.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "degrees", degrees)

    @property
    def n_intervals(self) -> int:
        return self.degrees.size

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        """Local step sizes ``k_n``."""
        return np.diff(self.nodes)

    @property
    def max_step(self) -> float:
        return float(self.steps.max())

    def interval(self, n: int) -> tuple[float, float]:
        """Endpoints of the ``n``-th interval (0-based)."""
        return float(self.nodes[n]), float(self.nodes[n + 1])

    def __len__(self):
        return self.n_intervals

    def __eq__(self, other):
        if not isinstance(other, TimePartition):
            return NotImplemented
        return (np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.degrees, other.degrees))

    def __hash__(self):
        return hash((self.nodes.tobytes(), self.degrees.tobytes()))

    def describe(self) -> str:
        degs = np.unique(self.degrees)
        r = str(degs[0]) if degs.size == 1 else "var"
        return f"N={self.n_intervals};r={r};T={self.horizon:g}"


def uniform(T: float, N: int, r: int) -> TimePartition:
    """``N`` equal intervals of width ``T / N``, all of degree ``r``."""
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    if N < 1:
        raise ValueError(f"need at least one interval, got N={N}")
    if r < 1:
        raise ValueError(f"degree must be >= 1, got r={r}")
    nodes = T * np.arange(N + 1) / N
    nodes[-1] = T
    return TimePartition(nodes, np.full(N, r))


def bisect(p: TimePartition) -> TimePartition:
    """Split every interval at its midpoint; degrees are duplicated."""
    nodes = np.empty(2 * p.n_intervals + 1)
    nodes[0::2] = p.nodes
    nodes[1::2] = 0.5 * (p.nodes[:-1] + p.nodes[1:])
    return TimePartition(nodes, np.repeat(p.degrees, 2))


def raise_order(p: TimePartition, delta: int = 1) -> TimePartition:
    """Same nodes, every degree increased by ``delta``."""
    if delta < 1:
        raise ValueError(f"delta must be >= 1, got {delta}")
    return TimePartition(p.nodes, p.degrees + delta)


def with_degree(p: TimePartition, r: int) -> TimePartition:
    """Same nodes, constant degree ``r`` everywhere."""
    return TimePartition(p.nodes, np.full(p.n_intervals, r))
