"""Pointwise 3x3 algebra of the shallow water system.

Every constructor broadcasts: scalar inputs give a ``(3, 3)`` matrix,
array inputs of shape ``S`` give ``S + (3, 3)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Params, State
from .errors import NonPositiveHeight, NotSupercritical

# smallest admissible u^2 - g*phi (resp. v) before the eigenvalue formulas degenerate
DEGENERACY_MARGIN = 1e-12


def _mat(*rows) -> np.ndarray:
    arrs = np.broadcast_arrays(*[np.asarray(x, dtype=float) for row in rows for x in row])
    shape = arrs[0].shape
    out = np.empty(shape + (3, 3))
    for k, a in enumerate(arrs):
        out[..., k // 3, k % 3] = a
    return out


def e1(u, v, phi, g):
    """x-flux Jacobian of the linearised system."""
    z = np.zeros_like(np.asarray(u, dtype=float))
    return _mat((u, z, z + g), (z, u, z), (phi, z, u))


def e2(u, v, phi, g):
    z = np.zeros_like(np.asarray(v, dtype=float))
    return _mat((v, z, z), (z, v, z + g), (z, phi, v))


def _require_positive_height(phi):
    if np.any(np.asarray(phi) <= 0):
        raise NonPositiveHeight("water height must be positive")


def symmetrizer(phi, g):
    """``diag(1, 1, g/phi)``."""
    _require_positive_height(phi)
    phi = np.asarray(phi, dtype=float)
    one = np.ones_like(phi)
    z = np.zeros_like(phi)
    return _mat((one, z, z), (z, one, z), (z, z, g / phi))


def e1_sym(u, v, phi, g):
    _require_positive_height(phi)
    c = np.sqrt(g * np.asarray(phi, dtype=float))
    z = np.zeros_like(c)
    return _mat((u + z, z, c), (z, u + z, z), (c, z, u + z))


def e2_sym(u, v, phi, g):
    _require_positive_height(phi)
    c = np.sqrt(g * np.asarray(phi, dtype=float))
    z = np.zeros_like(c)
    return _mat((v + z, z, z), (z, v + z, c), (z, c, v + z))


@dataclass(frozen=True)
class CharData:
    """Characteristic data at one point or an array of points.

    ``a`` and ``b`` are the diagonal entries of ``P^T E1sym P`` and
    ``P^T E2sym P``; ``lambdas`` are the eigenvalues of
    ``E2sym^{-1} E1sym`` in closed form.
    """

    kappa: np.ndarray
    kappa0: np.ndarray
    lambdas: tuple
    a: tuple
    b: tuple
    P: np.ndarray
    Pinv: np.ndarray


def char_data(u, v, phi, g) -> CharData:
    u, v, phi = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (u, v, phi)))
    mu = u * u - g * phi
    mv = v * v - g * phi
    if (
        np.any(u <= 0)
        or np.any(v <= 0)
        or np.any(phi <= 0)
        or np.any(mu <= DEGENERACY_MARGIN)
        or np.any(mv <= DEGENERACY_MARGIN)
    ):
        raise NotSupercritical("char_data needs u, v, phi > 0 and u^2, v^2 > g*phi")
    c = np.sqrt(g * phi)
    q = u * u + v * v
    kappa = np.sqrt(q - g * phi)
    kappa0 = np.sqrt(g * (q - g * phi) / phi)
    lam1 = (u * v + phi * kappa0) / mv
    lam2 = (u * v - phi * kappa0) / mv
    lam3 = u / v
    Pinv = _mat((v, -u, kappa), (v, -u, -kappa), (u, v, c))
    P = np.linalg.inv(Pinv)
    s = 2.0 * q * kappa
    a = ((u * kappa + c * v) / s, (u * kappa - c * v) / s, u / q)
    # first two entries ordered to match the rows of Pinv above
    b = ((v * kappa - c * u) / s, (v * kappa + c * u) / s, v / q)
    return CharData(kappa, kappa0, (lam1, lam2, lam3), a, b, P, Pinv)


def to_characteristic(U: State, background: State, g: float) -> np.ndarray:
    """``Xi = P(background)^{-1} U`` node by node, shape ``(3, nx, ny)``."""
    cd = char_data(background.u, background.v, background.phi, g)
    return np.einsum("xyij,jxy->ixy", cd.Pinv, U.data)


def from_characteristic(xi: np.ndarray, background: State, g: float) -> State:
    cd = char_data(background.u, background.v, background.phi, g)
    return State(background.grid, np.einsum("xyij,jxy->ixy", cd.P, xi))


@dataclass(frozen=True)
class SupercriticalReport:
    ok: bool
    strong: bool
    worst_margins: dict
    worst_node: dict

    def failures(self) -> list[str]:
        return [k for k, m in self.worst_margins.items() if m < 0]

    def summary(self) -> str:
        lines = [f"supercritical({'strong' if self.strong else 'standard'}): {'ok' if self.ok else 'FAILED'}"]
        for name, m in self.worst_margins.items():
            lines.append(f"  {name:<14s} margin {m: .6e} at node {self.worst_node[name]}")
        return "\n".join(lines)


def margins(u, v, phi, p: Params, strong: bool = False) -> dict:
    """Signed margins of every regime inequality; non-negative means satisfied."""
    lo = 2.0 * p.c0 if strong else p.c0
    hi = 0.5 * p.c1 if strong else p.c1
    c2sq = (2.0 if strong else 1.0) * p.c2**2
    return {
        "u_lower": u - lo,
        "u_upper": hi - u,
        "v_lower": v - lo,
        "v_upper": hi - v,
        "phi_lower": phi - lo,
        "phi_upper": hi - phi,
        "u_froude": u * u - p.g * phi - c2sq,
        "v_froude": v * v - p.g * phi - c2sq,
    }


def check_supercritical(s: State, p: Params, strong: bool = False) -> SupercriticalReport:
    worst, where = {}, {}
    for name, m in margins(s.u, s.v, s.phi, p, strong).items():
        m = np.asarray(m)
        k = int(np.argmin(m))
        worst[name] = float(m.flat[k])
        where[name] = tuple(int(i) for i in np.unravel_index(k, m.shape))
    ok = all(np.isfinite(list(worst.values()))) and min(worst.values()) >= 0.0
    return SupercriticalReport(ok, strong, worst, where)


def spectral_radii(s: State, g: float) -> tuple[float, float]:
    """Largest characteristic speeds ``max(u + sqrt(g phi))`` and ``max(v + sqrt(g phi))``."""
    c = np.sqrt(g * s.phi)
    return float(np.max(np.abs(s.u) + c)), float(np.max(np.abs(s.v) + c))
