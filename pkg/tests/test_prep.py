import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from swerect.core import Grid, State, weighted_l2
from swerect.errors import GridTooCoarse, KernelTooWide, SupportTouchesBoundary
from swerect.prep import (
    compatibility_residual,
    compatible_bump,
    cone_kernel,
    directional_mollify,
    mollify_state,
    smooth_bump,
)

G17 = Grid.square(17)


def test_kernel_geometry():
    A, B, w = cone_kernel(G17, 0.25)
    x, y = A * G17.dx, B * G17.dy
    assert np.all((0.5 * x < y) & (y < 2 * x))
    assert np.all(w >= 0) and np.isclose(w.sum(), 1.0)
    assert np.all(x >= 0.125 - 1e-12) and np.all(y >= 0.125 - 1e-12)


def test_zero_and_constant_fields():
    assert np.array_equal(directional_mollify(np.zeros(G17.shape), G17, 0.25), np.zeros(G17.shape))
    out = directional_mollify(np.ones(G17.shape), G17, 0.25)
    assert np.all(out[0, :] == 0) and np.all(out[:, 0] == 0)
    # kernel offsets reach at most 1.5 * eps in each direction
    reach = int(np.ceil(1.5 * 0.25 / G17.dx))
    assert np.allclose(out[reach:, reach:], 1.0, atol=1e-14)


def test_constant_field_against_direct_convolution():
    A, B, w = cone_kernel(G17, 0.25)
    f = np.ones(G17.shape)
    out = directional_mollify(f, G17, 0.25)
    i, j = 10, 9
    direct = sum(wk * f[i - a, j - b] for a, b, wk in zip(A, B, w) if i - a >= 0 and j - b >= 0)
    assert np.isclose(out[i, j], direct)


@given(arrays(float, (17, 17), elements=st.floats(-10, 10)), st.sampled_from([0.0625, 0.125, 0.25]))
def test_vanishes_on_strip_and_bounded(fld, eps):
    out = directional_mollify(fld, G17, eps)
    strip = int(np.floor(0.5 * eps / G17.dx + 1e-9))
    assert np.all(out[: strip + 1, :] == 0) and np.all(out[:, : strip + 1] == 0)
    # Young's inequality with a unit-mass kernel, in the uniform discrete l2 norm
    assert np.linalg.norm(out) <= np.linalg.norm(fld) * (1 + 1e-10)
    assert compatibility_residual(State(G17, np.stack([out, out, out])), 0) == 0.0


def test_mollifier_converges():
    g = Grid.square(257)
    X, Y = g.mesh()
    f = smooth_bump(X, Y, (0.5, 0.5), 0.3)
    errs = [weighted_l2(directional_mollify(f, g, e) - f, g) for e in (1 / 8, 1 / 16, 1 / 32)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.35 * errs[0]


def test_kernel_too_wide_and_too_coarse():
    with pytest.raises(KernelTooWide):
        directional_mollify(np.zeros(G17.shape), G17, 0.3)
    with pytest.raises(ValueError):
        cone_kernel(G17, 0.0)
    with pytest.raises(GridTooCoarse):
        cone_kernel(Grid.square(5), 0.01)


def test_mollify_state_shape():
    s = State.constant(G17, 1, 2, 3)
    assert mollify_state(s, 0.25).data.shape == s.data.shape


def test_compatible_bump():
    g = Grid.square(33)
    b = compatible_bump(g, 3, 0.7)
    assert compatibility_residual(b, 3) < 1e-10
    assert np.isclose(b.data.max(), 0.7)
    assert np.array_equal(compatible_bump(g, 3, 0.0).data, np.zeros((3, 33, 33)))
    with pytest.raises(SupportTouchesBoundary):
        compatible_bump(g, 3, 1.0, center=(0.0, 0.0))
    with pytest.raises(SupportTouchesBoundary):
        compatible_bump(g, 3, 1.0, center=(0.5, 0.5), width=0.45)


def test_compatibility_residual_examples():
    g = Grid.square(17)
    assert compatibility_residual(State.zeros(g), 3) == 0.0
    c = compatibility_residual(State.constant(g, 2.0, 0.0, 0.0), 0)
    assert c > 0.5
    with pytest.raises(GridTooCoarse):
        compatibility_residual(State.zeros(Grid.square(4)), 3)
    with pytest.raises(ValueError):
        compatibility_residual(State.zeros(g), -1)


def test_compatibility_detects_derivative_only_violation():
    g = Grid.square(33)
    X, Y = g.mesh()
    s = State.from_fields(g, X * Y, np.zeros_like(X), np.zeros_like(X))
    assert compatibility_residual(s, 0) == 0.0
    assert compatibility_residual(s, 1) > 0.1
