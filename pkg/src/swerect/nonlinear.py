"""Perturbations of a stationary supercritical flow.

Writing the full solution as ``U + Us`` with ``Us`` stationary, the
perturbation obeys a quasilinear system whose coefficients are evaluated
at ``U + Us`` and whose right-hand side ``F^U`` is bilinear in ``U`` and
the derivatives of ``Us``. :func:`picard_solve` linearises around the
previous iterate and calls :func:`swerect.linear.solve_linear`;
:func:`solve_direct` steps the quasilinear system itself as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import check_supercritical, e1, e2
from .core import (
    BackgroundFlow,
    Params,
    State,
    Trajectory,
    backward_x,
    backward_y,
    diff,
    linf_l2_distance,
    weighted_l2,
)
from .errors import GridMismatch, NoConvergence, NotSupercritical, RegimeLost, UnstableStep
from .linear import LinearProblem, cfl_dt, solve_linear, stable_dt
from .stationary import StationarySolution, coriolis

# successive differences below this are treated as exact zeros when forming ratios
RATIO_FLOOR = 1e-14
# fraction of the stability limit used when coefficients will drift during a run
HEADROOM = 0.9


@dataclass
class IterationReport:
    iterates: int = 0
    diffs: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    converged: bool = False
    final_residual: float = math.nan
    t_end: float = math.nan

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.ratios else 0.0

    def columns(self) -> dict:
        k = np.arange(1, len(self.diffs) + 1)
        ratio = np.full(len(self.diffs), np.nan)
        for n in range(1, len(self.diffs)):
            if self.diffs[n - 1] > RATIO_FLOOR:
                ratio[n] = self.diffs[n] / self.diffs[n - 1]
        return {"k": k, "diff": np.asarray(self.diffs, dtype=float), "ratio": ratio}


def _us_state(Us) -> State:
    return Us.state if isinstance(Us, StationarySolution) else Us


def perturbation_forcing(U: State, Us) -> State:
    """``F^U = -(u us_x + v us_y, u vs_x + v vs_y, u phis_x + v phis_y + phi (us_x + vs_y))``."""
    base = _us_state(Us)
    if U.grid != base.grid:
        raise GridMismatch("perturbation and stationary state live on different grids")
    Dx = diff(base.data, base.grid, "x")
    Dy = diff(base.data, base.grid, "y")
    u, v, phi = U.data
    out = np.empty_like(U.data)
    out[0] = u * Dx[0] + v * Dy[0]
    out[1] = u * Dx[1] + v * Dy[1]
    out[2] = u * Dx[2] + v * Dy[2] + phi * (Dx[0] + Dy[1])
    return State(U.grid, -out)


def _check_regime(s: State, p: Params, where: str, report=None):
    rep = check_supercritical(s, p)
    if not rep.ok:
        raise RegimeLost(
            f"{where} leaves the supercritical regime ({', '.join(rep.failures())})",
            where=where,
            report=report,
        )


def _sample_times(t_end: float, samples: int) -> np.ndarray:
    return np.linspace(0.0, t_end, samples)


def picard_solve(
    U0: State,
    Us,
    p: Params,
    t_end: float,
    tol: float = 1e-10,
    max_iter: int = 30,
    samples: int = 33,
    cfl: float = 0.5,
) -> tuple[Trajectory, IterationReport]:
    """Picard iteration for the perturbation system on ``[0, t_end]``.

    Iterate ``k+1`` solves the linear problem with background ``U^k + Us``
    and forcing ``F^{U^k}``, both taken from the stored samples of iterate
    ``k``; ``U^0`` is ``U0`` held constant in time.
    """
    base = _us_state(Us)
    report = IterationReport(t_end=t_end)
    _check_regime(U0 + base, p, "initial state plus stationary flow", report)
    times = _sample_times(t_end, samples)
    current = Trajectory(times, [U0] * samples)
    # one step count for every iterate so that successive iterates differ only through the data
    ref = U0 + base
    dt_ref = min(cfl_dt(ref, ref.grid, cfl, p.g), HEADROOM * stable_dt(ref, ref.grid, p.g))
    nsteps = math.ceil(t_end / dt_ref - 1e-12)

    for k in range(max_iter):
        bg_states = []
        for n, s in enumerate(current.states):
            full = s + base
            _check_regime(full, p, f"iterate {k} at t = {times[n]:.6g}", report)
            bg_states.append(full)
        forcing = Trajectory(times, [perturbation_forcing(s, base) for s in current.states])
        prob = LinearProblem(
            background=BackgroundFlow(times, bg_states),
            initial=U0,
            params=p,
            t_end=t_end,
            forcing=forcing,
            cfl=cfl,
            samples=samples,
            steps=nsteps,
        )
        nxt, _ = solve_linear(prob)
        d = linf_l2_distance(nxt, current)
        report.iterates = k + 1
        if report.diffs and report.diffs[-1] > RATIO_FLOOR:
            report.ratios.append(d / report.diffs[-1])
        report.diffs.append(d)
        current = nxt
        if d < tol:
            report.converged = not report.ratios or report.ratios[-1] < 1.0
            break
    for n, s in enumerate(current.states):
        _check_regime(s + base, p, f"final iterate at t = {times[n]:.6g}", report)
    report.final_residual = perturbation_residual(current, base, p)
    if not report.converged:
        raise NoConvergence(
            f"Picard iteration did not reach tol = {tol:g} in {report.iterates} iterations", report=report
        )
    return current, report


def perturbation_residual(traj: Trajectory, Us, p: Params) -> float:
    """Largest interval residual of the perturbation system, upwind in space, midpoint in time."""
    base = _us_state(Us)
    g = traj.grid
    worst = 0.0
    for n in range(len(traj) - 1):
        a, b = traj[n], traj[n + 1]
        h = traj.times[n + 1] - traj.times[n]
        r = (b.data - a.data) / h - 0.5 * (_quasilinear_rhs(a, base, p) + _quasilinear_rhs(b, base, p))
        r[:, 0, :] = 0.0
        r[:, :, 0] = 0.0
        worst = max(worst, weighted_l2(r, g))
    return worst


# ---------------------------------------------------------------------------
# direct stepping


def _quasilinear_rhs(U: State, base: State, p: Params) -> np.ndarray:
    full = U + base
    g = U.grid
    A = e1(full.u, full.v, full.phi, p.g)
    B = e2(full.u, full.v, full.phi, p.g)
    r = -np.einsum("xyij,jxy->ixy", A, backward_x(U.data, g.dx))
    r -= np.einsum("xyij,jxy->ixy", B, backward_y(U.data, g.dy))
    r -= coriolis(U.data, p.f)
    r += perturbation_forcing(U, base).data
    return r


def _zero_inflow(a: np.ndarray) -> np.ndarray:
    a[:, 0, :] = 0.0
    a[:, :, 0] = 0.0
    return a


def _require_step(full: State, dt: float, p: Params):
    rep = check_supercritical(full, p)
    if not rep.ok:
        raise NotSupercritical(f"U + Us violates the supercritical condition: {', '.join(rep.failures())}")
    limit = stable_dt(full, full.grid, p.g)
    if dt > limit * (1 + 1e-12):
        raise UnstableStep(f"dt = {dt:.6g} exceeds the stability limit {limit:.6g}")


def direct_nonlinear_step(U: State, Us, dt: float, p: Params) -> State:
    """One Heun step of the quasilinear perturbation system, coefficients at ``U + Us``."""
    base = _us_state(Us)
    _require_step(U + base, dt, p)
    U1 = State(U.grid, _zero_inflow(U.data + dt * _quasilinear_rhs(U, base, p)))
    U2 = State(U.grid, _zero_inflow(U1.data + dt * _quasilinear_rhs(U1, base, p)))
    return State(U.grid, _zero_inflow(0.5 * (U.data + U2.data)))


def _march(step, U0: State, speed_ref, p: Params, t_end: float, cfl: float, samples: int) -> Trajectory:
    grid = U0.grid
    # step size from the initial coefficients, with headroom for their drift
    dt_max = min(cfl_dt(speed_ref, grid, cfl, p.g), HEADROOM * stable_dt(speed_ref, grid, p.g))
    intervals = samples - 1
    nsteps = intervals * math.ceil(t_end / dt_max / intervals - 1e-12)
    dt = t_end / nsteps
    every = nsteps // intervals
    times, states = [0.0], [U0]
    U = U0
    for n in range(nsteps):
        U = step(U, dt)
        if (n + 1) % every == 0:
            times.append((n + 1) * dt)
            states.append(U)
    return Trajectory(times, states)


def solve_direct(U0: State, Us, p: Params, t_end: float, cfl: float = 0.5, samples: int = 33) -> Trajectory:
    """Evolve the perturbation system with :func:`direct_nonlinear_step`."""
    base = _us_state(Us)
    _check_regime(U0 + base, p, "initial state plus stationary flow")
    U0 = State(U0.grid, _zero_inflow(U0.data.copy()))
    return _march(lambda U, dt: direct_nonlinear_step(U, base, dt, p), U0, U0 + base, p, t_end, cfl, samples)


def full_system_step(V: State, inflow: State, dt: float, p: Params) -> State:
    """One Heun step of the unshifted system, with ``V`` reset to ``inflow`` on x=0 and y=0."""
    _require_step(V, dt, p)
    g = V.grid

    def rhs(W: np.ndarray) -> np.ndarray:
        A = e1(W[0], W[1], W[2], p.g)
        B = e2(W[0], W[1], W[2], p.g)
        r = -np.einsum("xyij,jxy->ixy", A, backward_x(W, g.dx))
        r -= np.einsum("xyij,jxy->ixy", B, backward_y(W, g.dy))
        return r - coriolis(W, p.f)

    def reset(W: np.ndarray) -> np.ndarray:
        W[:, 0, :] = inflow.data[:, 0, :]
        W[:, :, 0] = inflow.data[:, :, 0]
        return W

    W0 = reset(V.data.copy())
    W1 = reset(W0 + dt * rhs(W0))
    W2 = reset(W1 + dt * rhs(W1))
    return State(g, reset(0.5 * (W0 + W2)))


def solve_full(V0: State, inflow: State, p: Params, t_end: float, cfl: float = 0.5, samples: int = 33) -> Trajectory:
    """Evolve the unshifted system from ``V0`` with inflow values taken from ``inflow``."""
    return _march(lambda V, dt: full_system_step(V, inflow, dt, p), V0, V0, p, t_end, cfl, samples)
