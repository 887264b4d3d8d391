import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given
from numpy.polynomial import legendre as npleg
from numpy.testing import assert_allclose

from ftcsim.collocation import differentiate, legendre, lgl_grid, quadrature


def test_two_point_grid_is_trapezoid():
    g = lgl_grid(1)
    assert_allclose(g.nodes, [-1.0, 1.0])
    assert_allclose(g.weights, [1.0, 1.0])
    assert_allclose(g.D, [[-0.5, 0.5], [-0.5, 0.5]])


def test_three_point_grid_is_simpson():
    g = lgl_grid(2)
    assert_allclose(g.nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    assert_allclose(g.weights, [1 / 3, 4 / 3, 1 / 3], rtol=1e-14)


@pytest.mark.parametrize("N", [3, 8, 15])
def test_interior_nodes_are_roots_of_legendre_derivative(N):
    g = lgl_grid(N)
    dP = npleg.legder(np.eye(N + 1)[N])
    assert_allclose(npleg.legval(g.nodes[1:-1], dP), 0.0, atol=1e-10)


@pytest.mark.parametrize("N", [4, 15, 20])
def test_legendre_matches_numpy(N):
    x = np.linspace(-1, 1, 17)
    pn, pn1 = legendre(N, x)
    assert_allclose(pn, npleg.legval(x, np.eye(N + 1)[N]), atol=1e-13)
    assert_allclose(pn1, npleg.legval(x, np.eye(N)[N - 1]), atol=1e-13)


@given(st.integers(1, 20))
def test_weights_sum_to_interval_length(N):
    assert_allclose(lgl_grid(N).weights.sum(), 2.0, rtol=1e-13)


@given(st.integers(1, 20))
def test_nodes_symmetric_and_sorted(N):
    x = lgl_grid(N).nodes
    assert np.all(np.diff(x) > 0)
    assert_allclose(x, -x[::-1], atol=0)


@given(st.integers(1, 20), st.floats(-5.0, 5.0), st.floats(0.1, 10.0))
def test_constants_have_zero_derivative_and_scale(N, c, span):
    g = lgl_grid(N)
    v = np.full(g.size, c)
    assert_allclose(differentiate(g, v, 0.0, span), 0.0, atol=1e-10 * (1 + abs(c)) / span)
    assert_allclose(quadrature(g, v, 0.0, span), c * span, rtol=1e-12, atol=1e-14)


def test_time_scaling_needs_ordered_interval():
    g = lgl_grid(4)
    with pytest.raises(ValueError):
        differentiate(g, np.zeros(5), 1.0, 1.0)
    with pytest.raises(ValueError):
        quadrature(g, np.zeros(4))


def test_interpolation_reproduces_polynomial():
    g = lgl_grid(6)
    f = lambda x: 1 + x - 2 * x**3 + 0.5 * x**6
    tau = np.linspace(-1, 1, 41)
    assert_allclose(g.interpolate(f(g.nodes), tau), f(tau), atol=1e-12)
    # hitting a node returns the nodal value exactly
    assert g.interpolate(f(g.nodes), g.nodes[2])[0] == f(g.nodes)[2]
