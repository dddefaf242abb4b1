"""Initial data and forcings compatible with homogeneous inflow data on x=0 and y=0."""

from __future__ import annotations

import numpy as np

from .core import Grid, State, derivative_matrix, sobolev_norm
from .errors import GridTooCoarse, KernelTooWide, SupportTouchesBoundary

# entry points reject data whose compatibility residual exceeds this
COMPAT_TOL = 1e-6


def cone_kernel(grid: Grid, eps: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Discrete mollifier supported in the cone ``{0 < x/2 < y < 2x}``.

    The profile is ``exp(-1/(1-r^2))`` around ``(eps, eps)`` with radius
    ``eps/2``, cut to the open cone and normalised to unit discrete mass.
    Returns integer offsets ``(a, b)`` and weights.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if eps > min(grid.L1, grid.L2) / 4:
        raise KernelTooWide(f"eps = {eps} exceeds a quarter of the shortest side")
    radius = 0.5 * eps
    amax = int(np.ceil(1.5 * eps / grid.dx)) + 1
    bmax = int(np.ceil(1.5 * eps / grid.dy)) + 1
    A, B = np.meshgrid(np.arange(1, amax + 1), np.arange(1, bmax + 1), indexing="ij")
    zx, zy = A * grid.dx, B * grid.dy
    r2 = ((zx - eps) ** 2 + (zy - eps) ** 2) / radius**2
    inside = (r2 < 1.0) & (0.5 * zx < zy) & (zy < 2.0 * zx)
    if not np.any(inside):
        raise GridTooCoarse(f"no grid offsets inside the kernel support for eps = {eps}")
    w = np.exp(-1.0 / (1.0 - r2[inside]))
    return A[inside], B[inside], w / w.sum()


def directional_mollify(fld: np.ndarray, grid: Grid, eps: float) -> np.ndarray:
    """Convolve the zero extension of ``fld`` with the cone kernel.

    Works on arrays whose trailing axes are ``(nx, ny)``. Every kernel
    offset points into the positive quadrant by at least ``eps/2``, so the
    result vanishes identically on a strip of that width along x=0 and y=0.
    """
    fld = np.asarray(fld, dtype=float)
    A, B, w = cone_kernel(grid, eps)
    out = np.zeros_like(fld)
    nx, ny = grid.nx, grid.ny
    for a, b, wk in zip(A, B, w):
        if a >= nx or b >= ny:
            continue
        out[..., a:, b:] += wk * fld[..., : nx - a, : ny - b]
    return out


def mollify_state(s: State, eps: float) -> State:
    return State(s.grid, directional_mollify(s.data, s.grid, eps))


def smooth_bump(X, Y, center, width) -> np.ndarray:
    """``exp(1 - 1/(1 - r^2/width^2))`` inside the disc, zero outside; peak value 1."""
    q = ((X - center[0]) ** 2 + (Y - center[1]) ** 2) / width**2
    out = np.zeros_like(q)
    inside = q < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - q[inside]))
    return out


def smooth_bump_grad(X, Y, center, width):
    """Value and exact first partials of :func:`smooth_bump`."""
    q = ((X - center[0]) ** 2 + (Y - center[1]) ** 2) / width**2
    val = np.zeros_like(q)
    dq = np.zeros_like(q)
    inside = q < 1.0
    val[inside] = np.exp(1.0 - 1.0 / (1.0 - q[inside]))
    dq[inside] = -val[inside] / (1.0 - q[inside]) ** 2
    bx = dq * 2.0 * (X - center[0]) / width**2
    by = dq * 2.0 * (Y - center[1]) / width**2
    return val, bx, by


def compatible_bump(
    grid: Grid,
    order: int,
    amplitude: float,
    center=None,
    width=None,
    weights=(1.0, 1.0, 1.0),
) -> State:
    """Smooth compactly supported bump whose derivatives up to ``order`` vanish on x=0, y=0.

    The support is a disc of radius ``width`` and must stay clear of the
    nodes read by the one-sided stencils on the inflow sides.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if center is None:
        center = (0.5 * grid.L1, 0.5 * grid.L2)
    if width is None:
        width = min(grid.L1, grid.L2) / 8
    if width <= 0:
        raise ValueError("width must be positive")
    reach_x = (order + 1) * grid.dx
    reach_y = (order + 1) * grid.dy
    if center[0] - width <= reach_x or center[1] - width <= reach_y:
        raise SupportTouchesBoundary(
            f"bump at {tuple(center)} with width {width} reaches the inflow boundary"
        )
    X, Y = grid.mesh()
    b = smooth_bump(X, Y, center, width)
    w = np.asarray(weights, dtype=float)
    s = State(grid, amplitude * w[:, None, None] * b[None])
    if amplitude != 0 and compatibility_residual(s, order) > 1e-10 * abs(amplitude):
        raise SupportTouchesBoundary("bump is not compatible to the requested order on this grid")
    return s


def boundary_derivatives(s: State, k: int) -> np.ndarray:
    """``|d^j U / dn^j|`` on x=0 and y=0 for ``j <= k``, stacked as ``(k+1, 2, 3, n)``.

    The second axis separates the x=0 side (normal derivative in x) from
    the y=0 side; trailing length is ``max(nx, ny)`` with zero padding.
    """
    g = s.grid
    n = max(g.nx, g.ny)
    out = np.zeros((k + 1, 2, 3, n))
    for j in range(k + 1):
        Dx = derivative_matrix(g.nx, g.dx, j)
        Dy = derivative_matrix(g.ny, g.dy, j)
        out[j, 0, :, : g.ny] = np.abs(np.einsum("k,ckj->cj", Dx[0], s.data))
        out[j, 1, :, : g.nx] = np.abs(np.einsum("k,cik->ci", Dy[0], s.data))
    return out


def compatibility_residual(s: State, k: int) -> float:
    """Largest normal derivative of order ``<= k`` on x=0 and y=0, scaled by ``1 + ||s||_{H^k}``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    g = s.grid
    if g.nx < k + 2 or g.ny < k + 2:
        raise GridTooCoarse(f"grid {g.nx}x{g.ny} cannot carry one-sided derivatives of order {k}")
    peak = float(np.max(boundary_derivatives(s, k)))
    if peak == 0.0:
        return 0.0
    kk = min(k, (min(g.nx, g.ny) - 1) // 2)
    return peak / (sobolev_norm(s, kk) + 1.0)
