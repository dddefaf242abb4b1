"""Grids, states, parameters, finite-difference operators and discrete norms.

Arrays are stored with shape ``(nx, ny)`` per component and indexed
``[i, j]`` with ``x = i*dx`` and ``y = j*dy``. Node ``(0, j)`` lies on
the inflow side ``x = 0`` and node ``(i, 0)`` on ``y = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .errors import EmptyTrajectory, GridMismatch, GridTooCoarse, NumericError


@dataclass(frozen=True)
class Grid:
    """Uniform node-centred grid on ``(0, L1) x (0, L2)``, boundary nodes included."""

    L1: float
    L2: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError(f"grid needs at least 3x3 nodes, got {self.nx}x{self.ny}")
        if not (self.L1 > 0 and self.L2 > 0):
            raise ValueError("domain lengths must be positive")

    @property
    def dx(self) -> float:
        return self.L1 / (self.nx - 1)

    @property
    def dy(self) -> float:
        return self.L2 / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.L1, self.nx)

    @cached_property
    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.L2, self.ny)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights, shape ``(nx, ny)``."""
        wx = np.full(self.nx, self.dx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny, self.dy)
        wy[[0, -1]] *= 0.5
        return np.outer(wx, wy)

    def coord(self, i: int, j: int) -> tuple[float, float]:
        return (i * self.dx, j * self.dy)

    def index(self, x: float, y: float) -> tuple[int, int]:
        """Nearest node to ``(x, y)``."""
        return (int(round(x / self.dx)), int(round(y / self.dy)))

    @classmethod
    def square(cls, n: int, length: float = 1.0) -> "Grid":
        return cls(length, length, n, n)


@dataclass(frozen=True, eq=False)
class State:
    """The unknown ``(u, v, phi)`` sampled on a grid.

    ``data`` has shape ``(3, nx, ny)``; components are views into it.
    """

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=float)
        if arr.shape != (3, self.grid.nx, self.grid.ny):
            raise ValueError(
                f"state data has shape {arr.shape}, expected {(3,) + self.grid.shape}"
            )
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_fields(cls, grid: Grid, u, v, phi) -> "State":
        data = np.empty((3, grid.nx, grid.ny))
        data[0], data[1], data[2] = u, v, phi
        return cls(grid, data)

    @classmethod
    def zeros(cls, grid: Grid) -> "State":
        return cls(grid, np.zeros((3, grid.nx, grid.ny)))

    @classmethod
    def constant(cls, grid: Grid, u: float, v: float, phi: float) -> "State":
        return cls.from_fields(grid, u, v, phi)

    @property
    def u(self) -> np.ndarray:
        return self.data[0]

    @property
    def v(self) -> np.ndarray:
        return self.data[1]

    @property
    def phi(self) -> np.ndarray:
        return self.data[2]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.data)))

    def copy(self) -> "State":
        return State(self.grid, self.data.copy())

    def _other(self, other) -> np.ndarray:
        if isinstance(other, State):
            if other.grid != self.grid:
                raise GridMismatch("states live on different grids")
            return other.data
        return other

    def __add__(self, other):
        return State(self.grid, self.data + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return State(self.grid, self.data - self._other(other))

    def __mul__(self, c):
        return State(self.grid, self.data * c)

    __rmul__ = __mul__

    def __neg__(self):
        return State(self.grid, -self.data)

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.data, other.data)

    __hash__ = None


@dataclass(frozen=True)
class Params:
    """Physical constants and regime bounds.

    ``c0 <= u, v, phi <= c1`` and ``u**2 - g*phi >= c2**2`` (same for v)
    define the supercritical regime; ``delta`` bounds perturbations
    around a stationary flow and ``m`` is the compatibility order.
    """

    g: float = 9.8
    f: float = 0.0
    c0: float = 0.04
    c1: float = 5.0
    c2: float = 1.0
    delta: float = 0.04
    m: int = 3

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("g must be positive")
        if self.f < 0:
            raise ValueError("Coriolis parameter must be non-negative")
        if not 0 < self.c0 < self.c1:
            raise ValueError("need 0 < c0 < c1")
        if not self.c2 > 0:
            raise ValueError("c2 must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if int(self.m) != self.m or self.m < 3:
            raise ValueError("compatibility order m must be an integer >= 3")

    @property
    def r2(self) -> float:
        """Equivalence constant between ``<S0 U, U>`` and the plain L2 norm."""
        return 1.0 / min(1.0, self.g / self.c1)


class Trajectory:
    """Time-indexed sequence of states on one grid, interpolated linearly."""

    def __init__(self, times: Sequence[float], states: Sequence[State]):
        times = np.asarray(times, dtype=float)
        states = tuple(states)
        if len(states) == 0:
            raise EmptyTrajectory("trajectory has no samples")
        if times.shape != (len(states),):
            raise ValueError("one time per state required")
        if np.any(np.diff(times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        grid = states[0].grid
        if any(s.grid != grid for s in states):
            raise GridMismatch("all samples must share one grid")
        self.times = times
        self.states = states
        self._stack = np.stack([s.data for s in states])

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, k):
        return self.states[k]

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def _bracket(self, t: float) -> tuple[int, float]:
        if len(self.times) == 1:
            return 0, 0.0
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        k = min(max(k, 0), len(self.times) - 2)
        h = self.times[k + 1] - self.times[k]
        return k, (t - self.times[k]) / h

    def at(self, t: float) -> State:
        if len(self.times) == 1:
            return self.states[0]
        k, theta = self._bracket(t)
        theta = min(max(theta, 0.0), 1.0)
        data = (1.0 - theta) * self._stack[k] + theta * self._stack[k + 1]
        return State(self.grid, data)

    def rate(self, t: float) -> np.ndarray:
        """Time derivative of the piecewise-linear interpolant, shape ``(3, nx, ny)``."""
        if len(self.times) == 1:
            return np.zeros_like(self._stack[0])
        k, _ = self._bracket(t)
        h = self.times[k + 1] - self.times[k]
        return (self._stack[k + 1] - self._stack[k]) / h

    @classmethod
    def steady(cls, state: State, t_end: float) -> "Trajectory":
        return cls([0.0, t_end], [state, state])


class BackgroundFlow(Trajectory):
    """The frozen coefficient field of the linear problem, sampled in time."""


# ---------------------------------------------------------------------------
# finite differences


def _fd_weights(offsets: np.ndarray, order: int) -> np.ndarray:
    n = len(offsets)
    A = np.array([[o**p / math.factorial(p) for o in offsets] for p in range(n)], dtype=float)
    rhs = np.zeros(n)
    rhs[order] = 1.0
    return np.linalg.solve(A, rhs)


@lru_cache(maxsize=256)
def _unit_derivative_matrix(n: int, order: int, accuracy: int) -> np.ndarray:
    if order == 0:
        return np.eye(n)
    width = 2 * ((order + 1) // 2) - 1 + accuracy
    half = width // 2
    one_sided = order + accuracy
    if n < one_sided:
        raise GridTooCoarse(
            f"{n} nodes cannot carry a derivative of order {order} at accuracy {accuracy}"
        )
    D = np.zeros((n, n))
    for i in range(n):
        if i - half >= 0 and i + half <= n - 1:
            cols = np.arange(i - half, i + half + 1)
        elif i - half < 0:
            cols = np.arange(0, one_sided)
        else:
            cols = np.arange(n - one_sided, n)
        D[i, cols] = _fd_weights(cols - i, order)
    D.setflags(write=False)
    return D


def derivative_matrix(n: int, h: float, order: int = 1, accuracy: int = 2) -> np.ndarray:
    """Dense ``n x n`` matrix of the ``order``-th derivative on a uniform 1D grid.

    Central stencils in the interior, one-sided stencils of the same
    accuracy near the ends.
    """
    return _unit_derivative_matrix(n, order, accuracy) / h**order


def diff(a: np.ndarray, grid: Grid, axis: str, order: int = 1, accuracy: int = 2) -> np.ndarray:
    """Differentiate the trailing ``(nx, ny)`` axes of ``a`` along ``x`` or ``y``."""
    if order == 0:
        return np.array(a, dtype=float, copy=True)
    if axis == "x":
        D = derivative_matrix(grid.nx, grid.dx, order, accuracy)
        return np.einsum("ik,...kj->...ij", D, a)
    if axis == "y":
        D = derivative_matrix(grid.ny, grid.dy, order, accuracy)
        return np.einsum("jk,...ik->...ij", D, a)
    raise ValueError(f"unknown axis {axis!r}")


def partial(s: State, ax: int, ay: int, accuracy: int = 2) -> np.ndarray:
    """``d^ax/dx^ax d^ay/dy^ay`` of every component, shape ``(3, nx, ny)``."""
    out = diff(s.data, s.grid, "x", ax, accuracy) if ax else s.data
    return diff(out, s.grid, "y", ay, accuracy) if ay else np.array(out, copy=True)


def backward_x(a: np.ndarray, dx: float) -> np.ndarray:
    """First-order upwind difference along x; the ``i = 0`` column is left at zero."""
    out = np.zeros_like(a)
    out[..., 1:, :] = (a[..., 1:, :] - a[..., :-1, :]) / dx
    return out


def backward_y(a: np.ndarray, dy: float) -> np.ndarray:
    out = np.zeros_like(a)
    out[..., 1:] = (a[..., 1:] - a[..., :-1]) / dy
    return out


# ---------------------------------------------------------------------------
# norms


def weighted_l2(a: np.ndarray, grid: Grid) -> float:
    """Trapezoid L2 norm of an array whose trailing axes are ``(nx, ny)``."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise NumericError("non-finite values in field")
    sq = a * a
    if sq.ndim > 2:
        sq = sq.reshape(-1, grid.nx, grid.ny).sum(axis=0)
    return math.sqrt(float(np.sum(sq * grid.weights)))


def l2_norm(s: State) -> float:
    return weighted_l2(s.data, s.grid)


def multi_indices(k: int):
    for total in range(k + 1):
        for ax in range(total, -1, -1):
            yield ax, total - ax


def sobolev_norm(s: State, k: int) -> float:
    """Discrete ``H^k`` norm: root of the summed squared L2 norms of all ``d^alpha``, ``|alpha| <= k``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > 0 and (s.grid.nx <= 2 * k or s.grid.ny <= 2 * k):
        raise GridTooCoarse(f"grid {s.grid.nx}x{s.grid.ny} too coarse for H^{k}")
    total = 0.0
    for ax, ay in multi_indices(k):
        total += weighted_l2(partial(s, ax, ay), s.grid) ** 2
    return math.sqrt(total)


def linf_l2_norm(traj) -> float:
    states = list(traj)
    if not states:
        raise EmptyTrajectory("empty trajectory")
    return max(l2_norm(s) for s in states)


def linf_l2_distance(a, b) -> float:
    """``max_t ||a(t) - b(t)||_{L2}`` for two trajectories sampled at the same instants."""
    sa, sb = list(a), list(b)
    if len(sa) != len(sb):
        raise ValueError("trajectories have different sample counts")
    if not sa:
        raise EmptyTrajectory("empty trajectory")
    return max(l2_norm(x - y) for x, y in zip(sa, sb))
