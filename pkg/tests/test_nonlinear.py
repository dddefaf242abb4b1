import numpy as np
import pytest
from hypothesis import given, strategies as st

from swerect.algebra import e1, e2
from swerect.core import Grid, Params, State, diff, linf_l2_distance, l2_norm
from swerect.errors import GridMismatch, NoConvergence, NotSupercritical, RegimeLost, UnstableStep
from swerect.linear import stable_dt
from swerect.nonlinear import (
    direct_nonlinear_step,
    perturbation_forcing,
    picard_solve,
    solve_direct,
    solve_full,
)
from swerect.prep import compatibility_residual, compatible_bump
from swerect.scenarios import BASE_FLOW
from swerect.stationary import constant_state, coriolis, y_independent_stationary

G33 = Grid.square(33)
PF = Params(f=0.05)
PROFILE = y_independent_stationary((2.0, 2.0, 0.1), PF, G33)
BUMP = compatible_bump(G33, 3, 0.02, width=0.3)


def _operator(V: State, p: Params) -> np.ndarray:
    Vx, Vy = diff(V.data, V.grid, "x"), diff(V.data, V.grid, "y")
    A, B = e1(V.u, V.v, V.phi, p.g), e2(V.u, V.v, V.phi, p.g)
    return np.einsum("xyij,jxy->ixy", A, Vx) + np.einsum("xyij,jxy->ixy", B, Vy) + coriolis(V.data, p.f)


def test_forcing_matches_shifted_operator():
    # N(U + Us) - N(Us) = E1(U+Us) U_x + E2(U+Us) U_y + l(U) - F^U, exactly in the discrete algebra
    U, Us = BUMP, PROFILE.state
    full = U + Us
    Ux, Uy = diff(U.data, G33, "x"), diff(U.data, G33, "y")
    A, B = e1(full.u, full.v, full.phi, PF.g), e2(full.u, full.v, full.phi, PF.g)
    lhs = _operator(full, PF) - _operator(Us, PF)
    rhs = (
        np.einsum("xyij,jxy->ixy", A, Ux)
        + np.einsum("xyij,jxy->ixy", B, Uy)
        + coriolis(U.data, PF.f)
        - perturbation_forcing(U, PROFILE).data
    )
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_forcing_trivial_cases():
    assert np.all(perturbation_forcing(State.zeros(G33), PROFILE).data == 0)
    const = constant_state(*BASE_FLOW, Params(), G33)
    assert np.all(perturbation_forcing(BUMP, const).data == 0)
    with pytest.raises(GridMismatch):
        perturbation_forcing(State.zeros(Grid.square(9)), PROFILE)


@given(st.floats(-10, 10))
def test_forcing_is_linear(alpha):
    a = perturbation_forcing(BUMP * alpha, PROFILE).data
    b = alpha * perturbation_forcing(BUMP, PROFILE).data
    assert np.max(np.abs(a - b)) <= 1e-14 * max(1.0, abs(alpha))


def test_forcing_vanishes_where_perturbation_does():
    F = perturbation_forcing(BUMP, PROFILE)
    assert compatibility_residual(F, 3) == 0.0


def test_zero_is_fixed_point():
    traj, rep = picard_solve(State.zeros(G33), PROFILE, PF, 0.3)
    assert rep.iterates == 1 and rep.converged and rep.diffs == [0.0] and rep.ratios == []
    assert all(np.all(s.data == 0) for s in traj)


def test_picard_converges_and_preserves_compatibility():
    traj, rep = picard_solve(BUMP, PROFILE, PF, 0.1)
    assert rep.converged and rep.max_ratio < 0.6
    assert all(b < a for a, b in zip(rep.diffs, rep.diffs[1:]))
    assert max(compatibility_residual(s, 1) for s in traj) <= 1e-6
    assert np.isfinite(rep.final_residual)


def test_picard_failure_modes():
    with pytest.raises(NoConvergence) as exc:
        picard_solve(BUMP, PROFILE, PF, 0.1, max_iter=2)
    assert exc.value.report.iterates == 2 and len(exc.value.report.diffs) == 2
    big = compatible_bump(G33, 3, -0.2, width=0.3, weights=(0.0, 0.0, 1.0))
    with pytest.raises(RegimeLost):
        picard_solve(big, PROFILE, PF, 0.1)


def test_iteration_columns():
    _, rep = picard_solve(BUMP, PROFILE, PF, 0.05)
    cols = rep.columns()
    assert list(cols) == ["k", "diff", "ratio"]
    assert np.isnan(cols["ratio"][0]) and np.allclose(cols["ratio"][1:], rep.ratios)


def test_direct_step_basics():
    dt = 0.5 * stable_dt(PROFILE.state, G33, PF.g)
    assert np.all(direct_nonlinear_step(State.zeros(G33), PROFILE, dt, PF).data == 0)
    out = direct_nonlinear_step(BUMP, PROFILE, dt, PF)
    assert compatibility_residual(out, 1) <= 1e-6
    with pytest.raises(UnstableStep):
        direct_nonlinear_step(BUMP, PROFILE, 10 * dt, PF)
    with pytest.raises(NotSupercritical):
        direct_nonlinear_step(compatible_bump(G33, 3, -0.2, width=0.3, weights=(0, 0, 1)), PROFILE, dt, PF)


def test_direct_agrees_with_picard_under_refinement():
    gaps = []
    for n in (33, 65, 129):
        g = Grid.square(n)
        Us = y_independent_stationary((2.0, 2.0, 0.1), PF, g)
        U0 = compatible_bump(g, 3, 0.02, width=0.3)
        traj, _ = picard_solve(U0, Us, PF, 0.1)
        gaps.append(linf_l2_distance(traj, solve_direct(U0, Us, PF, 0.1)))
    assert gaps[0] > gaps[1] > gaps[2]


def test_translation_check():
    gaps = []
    for n in (33, 65, 129):
        g = Grid.square(n)
        Us = y_independent_stationary((2.0, 2.0, 0.1), PF, g)
        U0 = compatible_bump(g, 3, 0.02, width=0.3)
        pert = solve_direct(U0, Us, PF, 0.1)
        full = solve_full(U0 + Us.state, Us.state, PF, 0.1)
        gaps.append(max(l2_norm(a - (b + Us.state)) for a, b in zip(full, pert)))
    orders = np.log2(np.array(gaps[:-1]) / gaps[1:])
    assert np.all(orders > 0.8)
