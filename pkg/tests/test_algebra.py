import numpy as np
import pytest
from hypothesis import given, strategies as st

from swerect.algebra import (
    char_data,
    check_supercritical,
    e1,
    e1_sym,
    e2,
    e2_sym,
    from_characteristic,
    spectral_radii,
    symmetrizer,
    to_characteristic,
)
from swerect.core import Grid, Params, State
from swerect.errors import NonPositiveHeight, NotSupercritical

G = 9.8


@st.composite
def supercritical(draw):
    u = draw(st.floats(1.0, 5.0))
    v = draw(st.floats(1.0, 5.0))
    frac = draw(st.floats(0.01, 1.0))
    phi = frac * (min(u, v) ** 2 - 1.0) / G
    if phi <= 0:
        phi = 1e-3 * (min(u, v) ** 2) / G
    return u, v, phi


@given(supercritical())
def test_closed_form_eigenvalues(pt):
    u, v, phi = pt
    cd = char_data(u, v, phi, G)
    eig = np.sort(np.linalg.eigvals(np.linalg.solve(e2_sym(u, v, phi, G), e1_sym(u, v, phi, G))).real)
    assert np.allclose(np.sort(cd.lambdas), eig, rtol=1e-9)
    assert cd.lambdas[0] == max(cd.lambdas)


@given(supercritical())
def test_characteristic_diagonalisation(pt):
    u, v, phi = pt
    cd = char_data(u, v, phi, G)
    assert np.allclose(cd.P.T @ e1_sym(u, v, phi, G) @ cd.P, np.diag(cd.a), atol=1e-12)
    assert np.allclose(cd.P.T @ e2_sym(u, v, phi, G) @ cd.P, np.diag(cd.b), atol=1e-12)
    assert np.allclose(cd.P @ cd.Pinv, np.eye(3), atol=1e-12)


@given(supercritical())
def test_symmetrizer_makes_fluxes_symmetric(pt):
    u, v, phi = pt
    S = symmetrizer(phi, G)
    for E in (e1(u, v, phi, G), e2(u, v, phi, G)):
        M = S @ E
        assert np.allclose(M, M.T)
    # conjugating by S^{1/2} gives the symmetric forms
    h = np.sqrt(np.diag(S))
    assert np.allclose(h[:, None] * e1(u, v, phi, G) / h[None, :], e1_sym(u, v, phi, G))


def test_vectorised_shapes():
    u = np.full((4, 5), 2.0)
    assert e1(u, u, u * 0.05, G).shape == (4, 5, 3, 3)
    cd = char_data(u, u, u * 0.05, G)
    assert cd.P.shape == (4, 5, 3, 3) and cd.lambdas[0].shape == (4, 5)


def test_rejections():
    with pytest.raises(NonPositiveHeight):
        symmetrizer(0.0, G)
    with pytest.raises(NotSupercritical):
        char_data(1.0, 1.0, 0.5, G)  # subcritical
    with pytest.raises(NotSupercritical):
        char_data(-2.0, 2.0, 0.1, G)


def test_characteristic_round_trip():
    g = Grid.square(6)
    bg = State.constant(g, 2.0, 2.5, 0.1)
    rng = np.random.default_rng(0)
    U = State(g, rng.standard_normal((3, 6, 6)))
    back = from_characteristic(to_characteristic(U, bg, G), bg, G)
    assert np.allclose(back.data, U.data)


def test_check_supercritical_reports():
    g = Grid.square(5)
    p = Params()
    ok = check_supercritical(State.constant(g, 2, 2, 0.1), p)
    assert ok.ok and not ok.failures() and "ok" in ok.summary()
    bad = check_supercritical(State.constant(g, 1, 2, 0.1), p)
    assert not bad.ok and "u_froude" in bad.failures()


def test_strong_check_is_stricter():
    g = Grid.square(5)
    p = Params()
    s = State.constant(g, 2.0, 2.0, 0.06)
    assert check_supercritical(s, p).ok
    assert not check_supercritical(s, p, strong=True).ok


def test_spectral_radii():
    g = Grid.square(5)
    rx, ry = spectral_radii(State.constant(g, 2, 3, 0.1), G)
    assert np.isclose(rx, 2 + np.sqrt(0.98)) and np.isclose(ry, 3 + np.sqrt(0.98))
