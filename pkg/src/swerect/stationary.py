"""Stationary supercritical flows used as the base state of the nonlinear problem."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import check_supercritical, e1, e2, margins
from .core import Grid, Params, State, diff, weighted_l2
from .errors import (
    CoriolisRequiresProfile,
    IntegrationFailure,
    NotStrongSupercritical,
    RegimeLost,
)

# derivative accuracy used when measuring the stationary residual
RESIDUAL_ACCURACY = 4


@dataclass(frozen=True, eq=False)
class StationarySolution:
    state: State
    residual_norm: float
    kind: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.state.grid


def coriolis(data: np.ndarray, f: float) -> np.ndarray:
    """``l(U) = (-f v, f u, 0)`` for data of shape ``(3, ...)``."""
    out = np.zeros_like(data)
    out[0] = -f * data[1]
    out[1] = f * data[0]
    return out


def stationary_residual(s: State, p: Params, accuracy: int = RESIDUAL_ACCURACY) -> np.ndarray:
    """Pointwise ``E1(U) U_x + E2(U) U_y + l(U)``, shape ``(3, nx, ny)``."""
    Ux = diff(s.data, s.grid, "x", 1, accuracy)
    Uy = diff(s.data, s.grid, "y", 1, accuracy)
    A = e1(s.u, s.v, s.phi, p.g)
    B = e2(s.u, s.v, s.phi, p.g)
    return (
        np.einsum("xyij,jxy->ixy", A, Ux)
        + np.einsum("xyij,jxy->ixy", B, Uy)
        + coriolis(s.data, p.f)
    )


def _require_strong(s: State, p: Params):
    rep = check_supercritical(s, p, strong=True)
    if not rep.ok:
        raise NotStrongSupercritical(
            "state violates the strong supercritical condition: " + ", ".join(rep.failures())
        )
    return rep


def constant_state(u0: float, v0: float, phi0: float, p: Params, grid: Grid) -> StationarySolution:
    """A constant supercritical state; exact only without rotation."""
    if p.f != 0:
        raise CoriolisRequiresProfile("constant states are stationary only for f = 0")
    s = State.constant(grid, u0, v0, phi0)
    _require_strong(s, p)
    res = weighted_l2(stationary_residual(s, p), grid)
    return StationarySolution(s, res, "constant")


def _ode_rhs(U: np.ndarray, p: Params) -> np.ndarray:
    # dU/dx = -E1(U)^{-1} l(U)
    A = e1(U[0], U[1], U[2], p.g)
    return np.linalg.solve(A, -coriolis(U, p.f))


def _rk4(U: np.ndarray, h: float, p: Params) -> np.ndarray:
    k1 = _ode_rhs(U, p)
    k2 = _ode_rhs(U + 0.5 * h * k1, p)
    k3 = _ode_rhs(U + 0.5 * h * k2, p)
    k4 = _ode_rhs(U + h * k3, p)
    return U + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _strongly_ok(U: np.ndarray, p: Params) -> bool:
    return min(float(m) for m in margins(U[0], U[1], U[2], p, strong=True).values()) >= 0.0


def march_profile(inlet, p: Params, grid: Grid, substeps: int = 1, max_retries: int = 8) -> np.ndarray:
    """Integrate the x-ODE from ``x = 0`` with classical RK4, returning ``(3, nx)``.

    A step that produces non-finite values or a singular flux matrix is
    retried with halved sub-steps up to ``max_retries`` times.
    """
    U = np.asarray(inlet, dtype=float).copy()
    if not _strongly_ok(U, p):
        raise NotStrongSupercritical("inlet state violates the strong supercritical condition")
    prof = np.empty((3, grid.nx))
    prof[:, 0] = U
    for i in range(1, grid.nx):
        for attempt in range(max_retries + 1):
            n = substeps * 2**attempt
            h = grid.dx / n
            try:
                W = U.copy()
                with np.errstate(all="raise"):
                    for _ in range(n):
                        W = _rk4(W, h, p)
                if np.all(np.isfinite(W)):
                    break
            except (np.linalg.LinAlgError, FloatingPointError):
                pass
        else:
            raise IntegrationFailure(f"step to x = {grid.x[i]:.6g} failed after {max_retries} retries")
        U = W
        if not _strongly_ok(U, p):
            raise RegimeLost(
                f"strong supercritical condition lost at x = {grid.x[i]:.6g}", where=float(grid.x[i])
            )
        prof[:, i] = U
    return prof


def y_independent_stationary(inlet, p: Params, grid: Grid, substeps: int = 1) -> StationarySolution:
    """Stationary flow depending on x only, obtained by marching the ODE ``E1(U) U_x + l(U) = 0``.

    Mass flux ``u*phi`` is conserved by the exact ODE; its drift along the
    march is returned in ``diagnostics``.
    """
    prof = march_profile(inlet, p, grid, substeps=substeps)
    data = np.repeat(prof[:, :, None], grid.ny, axis=2)
    s = State(grid, data)
    _require_strong(s, p)
    flux = prof[0] * prof[2]
    diag = {
        "mass_flux_drift": float(np.max(np.abs(flux - flux[0]))),
        "mass_flux": float(flux[0]),
    }
    res = weighted_l2(stationary_residual(s, p), grid)
    return StationarySolution(s, res, "y_independent", diag)
