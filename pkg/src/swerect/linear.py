"""Linearised evolution around a background flow, resolvent solves and energy bookkeeping.

The evolution is carried out in the symmetrised unknown
``W = S0^{1/2} U = (u, v, sqrt(g/phi_bg) * phi)`` so that both flux
matrices are symmetric positive definite. Spatial derivatives are
first-order backward differences (every characteristic enters through
x=0 or y=0) and time stepping is Heun's method, a convex combination of
two forward Euler steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .algebra import char_data, check_supercritical, e1_sym, e2_sym, spectral_radii
from .core import (
    BackgroundFlow,
    Grid,
    Params,
    State,
    Trajectory,
    backward_x,
    backward_y,
    diff,
    l2_norm,
    sobolev_norm,
    weighted_l2,
)
from .errors import (
    BackgroundTooShort,
    IncompatibleData,
    NotSupercritical,
    ResidualTooLarge,
    UnstableStep,
)
from .prep import COMPAT_TOL, compatibility_residual
from .stationary import coriolis

Forcing = Union[None, Trajectory, Callable[[float], State]]


@dataclass
class LinearProblem:
    """Data of the linear initial boundary value problem on ``[0, t_end]``.

    ``forcing`` may be ``None`` (zero), a sampled :class:`Trajectory`
    (linearly interpolated) or a callable ``t -> State``. ``samples`` is
    the number of equally spaced output instants including both ends;
    ``None`` records every time step. ``steps`` fixes the number of time
    steps (rounded up to a multiple of the sample intervals) instead of
    deriving it from ``cfl``.
    """

    background: BackgroundFlow
    initial: State
    params: Params
    t_end: float
    forcing: Forcing = None
    cfl: float = 0.5
    samples: Optional[int] = 33
    check_compatibility: bool = True
    steps: Optional[int] = None
    sobolev_orders: tuple = ()

    def forcing_at(self, t: float) -> Optional[State]:
        if self.forcing is None:
            return None
        if isinstance(self.forcing, Trajectory):
            return self.forcing.at(t)
        return self.forcing(t)


@dataclass
class EnergyReport:
    times: np.ndarray
    I0: np.ndarray
    l2: np.ndarray
    forcing_sq: np.ndarray
    bound: np.ndarray
    fitted_r1: float
    bound_ok: bool
    floor_ok: bool
    sobolev: dict = field(default_factory=dict)

    @property
    def bound_holds(self) -> np.ndarray:
        return self.I0 <= self.bound

    def columns(self) -> dict:
        return {
            "t": self.times,
            "I0": self.I0,
            "l2": self.l2,
            "bound_ok": self.bound_holds.astype(int),
        }


# ---------------------------------------------------------------------------
# coefficients


@dataclass
class _Coeffs:
    """Background-dependent coefficients of the symmetrised system at one instant."""

    A: np.ndarray  # E1sym, (3, 3, nx, ny)
    B: np.ndarray  # E2sym
    low: np.ndarray  # third column of the zeroth-order term, (3, nx, ny)
    s: np.ndarray  # sqrt(phi_bg / g)
    f: float

    @classmethod
    def build(cls, bg: State, bg_rate: Optional[np.ndarray], p: Params) -> "_Coeffs":
        if np.any(bg.phi <= 0):
            raise NotSupercritical("background height must stay positive")
        A = np.moveaxis(e1_sym(bg.u, bg.v, bg.phi, p.g), (-2, -1), (0, 1))
        B = np.moveaxis(e2_sym(bg.u, bg.v, bg.phi, p.g), (-2, -1), (0, 1))
        s = np.sqrt(bg.phi / p.g)
        sx = diff(s, bg.grid, "x")
        sy = diff(s, bg.grid, "y")
        st = np.zeros_like(s) if bg_rate is None else bg_rate[2] / (2.0 * p.g * s)
        low = np.empty((3,) + s.shape)
        low[0] = p.g * sx
        low[1] = p.g * sy
        low[2] = (st + bg.u * sx + bg.v * sy) / s
        return cls(A, B, low, s, p.f)

    def to_sym(self, data: np.ndarray) -> np.ndarray:
        out = data.copy()
        out[2] = data[2] / self.s
        return out

    def from_sym(self, data: np.ndarray) -> np.ndarray:
        out = data.copy()
        out[2] = data[2] * self.s
        return out

    def rhs(self, W: np.ndarray, G: Optional[np.ndarray], dx: float, dy: float) -> np.ndarray:
        Wx = backward_x(W, dx)
        Wy = backward_y(W, dy)
        r = -np.einsum("ijxy,jxy->ixy", self.A, Wx) - np.einsum("ijxy,jxy->ixy", self.B, Wy)
        r -= self.low * W[2]
        r -= coriolis(W, self.f)
        if G is not None:
            r += G
        return r


def _zero_inflow(W: np.ndarray) -> np.ndarray:
    W[:, 0, :] = 0.0
    W[:, :, 0] = 0.0
    return W


def _heun(W, c0: _Coeffs, c1: _Coeffs, G0, G1, dt, dx, dy):
    W1 = _zero_inflow(W + dt * c0.rhs(W, G0, dx, dy))
    W2 = _zero_inflow(W1 + dt * c1.rhs(W1, G1, dx, dy))
    return _zero_inflow(0.5 * (W + W2))


# ---------------------------------------------------------------------------
# public operations


def cfl_dt(background: State, grid: Grid, cfl: float, g: float) -> float:
    """``cfl * min(dx / max(u + sqrt(g phi)), dy / max(v + sqrt(g phi)))``."""
    rep_ok = np.all(background.phi > 0) and np.all(background.u**2 > g * background.phi) and np.all(
        background.v**2 > g * background.phi
    )
    if not rep_ok or np.any(background.u <= 0) or np.any(background.v <= 0):
        raise NotSupercritical("background sample is not supercritical")
    rx, ry = spectral_radii(background, g)
    return cfl * min(grid.dx / rx, grid.dy / ry)


def stable_dt(background: State, grid: Grid, g: float) -> float:
    """Largest step with ``dt (rx/dx + ry/dy) <= 1``; each Euler stage is then a convex combination."""
    cfl_dt(background, grid, 1.0, g)
    rx, ry = spectral_radii(background, g)
    return 1.0 / (rx / grid.dx + ry / grid.dy)


def _require_regime(bg: State, p: Params, label: str):
    rep = check_supercritical(bg, p)
    if not rep.ok:
        raise NotSupercritical(f"{label} violates the supercritical condition: {', '.join(rep.failures())}")


def _sym_forcing(c: _Coeffs, F: Optional[State]):
    return None if F is None else c.to_sym(F.data)


def linear_step(U: State, background: State, F: Optional[State], dt: float, p: Params) -> State:
    """One Heun step of the upwind scheme with coefficients frozen at ``background``."""
    grid = U.grid
    _require_regime(background, p, "background")
    limit = stable_dt(background, grid, p.g)
    if dt > limit * (1 + 1e-12):
        raise UnstableStep(f"dt = {dt:.6g} exceeds the stability limit {limit:.6g}")
    c = _Coeffs.build(background, None, p)
    G = _sym_forcing(c, F)
    W = _zero_inflow(c.to_sym(U.data))
    W = _heun(W, c, c, G, G, dt, grid.dx, grid.dy)
    return State(grid, c.from_sym(W))


def _step_count(t_end: float, dt_max: float, intervals: Optional[int]) -> int:
    n = max(1, math.ceil(t_end / dt_max - 1e-12))
    if intervals:
        n = intervals * math.ceil(n / intervals)
    return n


def fit_r1(times, I0, forcing_sq) -> float:
    """Smallest ``r >= 0`` with ``I0[k+1] - I0[k] <= r dt (I0[k] + |F_k|^2)`` on every interval."""
    r = 0.0
    for k in range(len(times) - 1):
        h = times[k + 1] - times[k]
        den = h * (I0[k] + forcing_sq[k])
        inc = I0[k + 1] - I0[k]
        if inc <= 0:
            continue
        if den <= 0:
            return math.inf
        with np.errstate(over="ignore"):
            r = max(r, float(inc / den))
    return r


def gronwall_bound(times, I0, forcing_sq, r1: float) -> np.ndarray:
    """``exp(r1 t) (I0(0) + r1 int_0^t |F|^2)`` with the left-point rule for the integral."""
    times = np.asarray(times, dtype=float)
    if not math.isfinite(r1):
        return np.where(times > times[0], math.inf, I0[0])
    integral = np.concatenate([[0.0], np.cumsum(np.diff(times) * forcing_sq[:-1])])
    with np.errstate(over="ignore"):
        return np.exp(r1 * (times - times[0])) * (I0[0] + r1 * integral)


def solve_linear(prob: LinearProblem) -> tuple[Trajectory, EnergyReport]:
    p = prob.params
    grid = prob.initial.grid
    bg = prob.background
    if bg.grid != grid:
        raise ValueError("background and initial state live on different grids")
    if bg.t_start > 0 or bg.t_end < prob.t_end * (1 - 1e-12):
        raise BackgroundTooShort(
            f"background covers [{bg.t_start}, {bg.t_end}], need [0, {prob.t_end}]"
        )
    for k, s in enumerate(bg.states):
        _require_regime(s, p, f"background sample {k}")
    if prob.check_compatibility:
        if compatibility_residual(prob.initial, p.m) > COMPAT_TOL:
            raise IncompatibleData("initial state violates the compatibility conditions")
        if isinstance(prob.forcing, Trajectory):
            probes = prob.forcing.states
        elif prob.forcing is not None:
            probes = [prob.forcing_at(0.0), prob.forcing_at(prob.t_end)]
        else:
            probes = []
        for s in probes:
            if compatibility_residual(s, p.m) > COMPAT_TOL:
                raise IncompatibleData("forcing violates the compatibility conditions")

    dt_max = min(cfl_dt(s, grid, prob.cfl, p.g) for s in bg.states)
    intervals = None if prob.samples is None else prob.samples - 1
    if prob.steps is None:
        nsteps = _step_count(prob.t_end, dt_max, intervals)
    else:
        nsteps = _step_count(prob.t_end, prob.t_end / prob.steps, intervals)
    dt = prob.t_end / nsteps
    limit = min(stable_dt(s, grid, p.g) for s in bg.states)
    if dt > limit * (1 + 1e-12):
        raise UnstableStep(f"cfl = {prob.cfl} gives dt = {dt:.6g} above the stability limit {limit:.6g}")
    every = 1 if intervals is None else nsteps // intervals

    def coeffs(t):
        return _Coeffs.build(bg.at(t), bg.rate(t) if len(bg) > 1 else None, p)

    c = coeffs(0.0)
    W = _zero_inflow(c.to_sym(prob.initial.data))
    F = prob.forcing_at(0.0)
    G = _sym_forcing(c, F)

    times, states, I0, l2, fsq = [], [], [], [], []

    def record(t, c, W, F):
        U = State(grid, c.from_sym(W))
        times.append(t)
        states.append(U)
        I0.append(weighted_l2(W, grid) ** 2)
        l2.append(l2_norm(U))
        fsq.append(0.0 if F is None else l2_norm(F) ** 2)

    record(0.0, c, W, F)
    for n in range(nsteps):
        t1 = (n + 1) * dt
        c1 = coeffs(t1)
        F1 = prob.forcing_at(t1)
        G1 = _sym_forcing(c1, F1)
        W = _heun(W, c, c1, G, G1, dt, grid.dx, grid.dy)
        if not np.all(np.isfinite(W)):
            raise UnstableStep(f"non-finite solution at t = {t1:.6g}")
        c, F, G = c1, F1, G1
        if (n + 1) % every == 0:
            record(t1, c, W, F)

    times = np.asarray(times)
    I0 = np.asarray(I0)
    fsq = np.asarray(fsq)
    r1 = fit_r1(times, I0, fsq)
    bound = gronwall_bound(times, I0, fsq, r1) * (1 + 1e-12) + 1e-300
    l2 = np.asarray(l2)
    floor_ok = bool(np.all(I0 >= min(1.0, p.g / p.c1) * l2**2 * (1 - 1e-12)))
    traj = Trajectory(times, states)
    sob = {k: np.array([sobolev_norm(s, k) for s in states]) for k in prob.sobolev_orders}
    report = EnergyReport(times, I0, l2, fsq, bound, r1, bool(np.all(I0 <= bound)), floor_ok, sob)
    return traj, report


# ---------------------------------------------------------------------------
# discrete operator diagnostics


def free_nodes(grid: Grid) -> np.ndarray:
    """Boolean mask of the nodes not on x=0 or y=0."""
    mask = np.ones(grid.shape, dtype=bool)
    mask[0, :] = False
    mask[:, 0] = False
    return mask


def step_matrix(background: State, dt: float, p: Params) -> np.ndarray:
    """Dense matrix of :func:`linear_step` (zero forcing) restricted to the free nodes."""
    grid = background.grid
    mask = free_nodes(grid)
    idx = np.flatnonzero(np.broadcast_to(mask, (3,) + grid.shape).ravel())
    M = np.empty((idx.size, idx.size))
    e = np.zeros(3 * grid.nx * grid.ny)
    for col, k in enumerate(idx):
        e[k] = 1.0
        out = linear_step(State(grid, e.reshape(3, *grid.shape)), background, None, dt, p)
        M[:, col] = out.data.ravel()[idx]
        e[k] = 0.0
    return M


def energy_weights(background: State, p: Params) -> np.ndarray:
    """Diagonal of the ``<S0 U, U>`` trapezoid inner product on the free nodes."""
    grid = background.grid
    mask = free_nodes(grid)
    w = np.stack([grid.weights, grid.weights, grid.weights * p.g / background.phi])
    return w[:, mask].ravel()


def weighted_operator_norm(M: np.ndarray, weights: np.ndarray) -> float:
    d = np.sqrt(weights)
    return float(np.linalg.norm(d[:, None] * M / d[None, :], 2))


def energy_constant(background: State, p: Params) -> float:
    """Energy growth constant ``1 + 1/2 max |d_x E1sym + d_y E2sym|`` of a frozen background.

    The additive 1 follows the convention ``r1 >= 1`` of the L2 estimate;
    for a constant background this returns exactly 1.
    """
    A = e1_sym(background.u, background.v, background.phi, p.g)
    B = e2_sym(background.u, background.v, background.phi, p.g)
    Ax = np.moveaxis(diff(np.moveaxis(A, (-2, -1), (0, 1)), background.grid, "x"), (0, 1), (-2, -1))
    By = np.moveaxis(diff(np.moveaxis(B, (-2, -1), (0, 1)), background.grid, "y"), (0, 1), (-2, -1))
    norms = np.linalg.norm(Ax + By, ord=2, axis=(-2, -1))
    return 1.0 + 0.5 * float(np.max(norms))


# ---------------------------------------------------------------------------
# resolvent


@dataclass
class ResolventInfo:
    residual: float
    truncation: float
    substeps: int


def resolvent_residual(U: State, background: State, F: State, omega: float, p: Params) -> np.ndarray:
    """``E1sym D-x U + E2sym D-y U + omega U - F`` on the grid (zero on x=0, y=0)."""
    A = np.moveaxis(e1_sym(background.u, background.v, background.phi, p.g), (-2, -1), (0, 1))
    B = np.moveaxis(e2_sym(background.u, background.v, background.phi, p.g), (-2, -1), (0, 1))
    g = U.grid
    r = (
        np.einsum("ijxy,jxy->ixy", A, backward_x(U.data, g.dx))
        + np.einsum("ijxy,jxy->ixy", B, backward_y(U.data, g.dy))
        + omega * U.data
        - F.data
    )
    return _zero_inflow(r)


def resolvent_solve(
    background: State,
    F: State,
    omega: float,
    p: Params,
    cfl: float = 0.5,
    return_info: bool = False,
):
    """Solve ``E1sym U_x + E2sym U_y + omega U = F`` with ``U = 0`` on x=0 and y=0.

    The y-direction plays the role of time: each row is advanced from the
    previous one by Heun sub-steps of ``U_y = E2sym^{-1}(F - omega U -
    E1sym D-x U)``, with the sub-step limited by the largest eigenvalue of
    ``E2sym^{-1} E1sym``. Coefficients and forcing are interpolated
    linearly between rows.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    _require_regime(background, p, "background")
    if compatibility_residual(F, p.m) > COMPAT_TOL:
        raise IncompatibleData("forcing violates the compatibility conditions")
    grid = background.grid
    cd = char_data(background.u, background.v, background.phi, p.g)
    lam_max = float(np.max(cd.lambdas[0]))
    h_max = cfl * grid.dx / lam_max
    nsub = max(1, math.ceil(grid.dy / h_max - 1e-12))
    h = grid.dy / nsub

    A = e1_sym(background.u, background.v, background.phi, p.g)  # (nx, ny, 3, 3)
    B = e2_sym(background.u, background.v, background.phi, p.g)
    Binv = np.linalg.inv(B)
    K = Binv @ A

    def rhs(row, theta, j):
        # row: (3, nx) at fractional position j + theta
        Kc = (1 - theta) * K[:, j] + theta * K[:, j + 1]
        Bc = (1 - theta) * Binv[:, j] + theta * Binv[:, j + 1]
        Fc = (1 - theta) * F.data[:, :, j] + theta * F.data[:, :, j + 1]
        dx_row = np.zeros_like(row)
        dx_row[:, 1:] = (row[:, 1:] - row[:, :-1]) / grid.dx
        out = np.einsum("xij,jx->ix", Bc, Fc - omega * row) - np.einsum("xij,jx->ix", Kc, dx_row)
        out[:, 0] = 0.0
        return out

    U = np.zeros((3, grid.nx, grid.ny))
    row = np.zeros((3, grid.nx))
    for j in range(grid.ny - 1):
        for k in range(nsub):
            th0, th1 = k / nsub, (k + 1) / nsub
            r1 = row + h * rhs(row, th0, j)
            r1[:, 0] = 0.0
            r2 = r1 + h * rhs(r1, th1, j)
            row = 0.5 * (row + r2)
            row[:, 0] = 0.0
        U[:, :, j + 1] = row
    sol = State(grid, U)

    res = weighted_l2(resolvent_residual(sol, background, F, omega, p), grid)
    rx = float(np.max(np.linalg.eigvalsh(A)))
    ry = float(np.max(np.linalg.eigvalsh(B)))
    uxx = weighted_l2(diff(U, grid, "x", 2), grid)
    uyy = weighted_l2(diff(U, grid, "y", 2), grid)
    trunc = 0.5 * (rx * grid.dx * uxx + ry * grid.dy * uyy)
    if res > 10.0 * trunc + 1e-12 * (1.0 + l2_norm(F)):
        raise ResidualTooLarge(f"resolvent residual {res:.3e} exceeds 10x truncation estimate {trunc:.3e}")
    if return_info:
        return sol, ResolventInfo(res, trunc, nsub)
    return sol
