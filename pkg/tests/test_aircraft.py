import warnings

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings
from numpy.polynomial import polynomial as npoly
from numpy.testing import assert_allclose

from ftcsim import aircraft as ac

# Thrust table re-typed independently of the module (rows: Mach power,
# columns: height power in units of 10 000 ft) and evaluated with numpy's
# 2-D power series. Values frozen from that evaluation.
THRUST_TABLE = np.array([
    [30.21, -0.668, -6.877, 1.951, -0.1512],
    [-33.8, 3.347, 18.13, -5.865, 0.4757],
    [100.8, -77.56, 5.441, 2.864, -0.3355],
    [-78.99, 101.4, -30.28, 3.236, -0.1089],
    [18.74, -31.6, 12.04, -1.785, 0.09417],
])
T_MAX_0_50 = 6044.700691895795
T_MAX_3048_0 = 5441.240632800001


def _oracle_thrust(h, V):
    return npoly.polyval2d(V / 340.3, h / 3048.0, THRUST_TABLE) * 4448.22 / 20.0


def test_frozen_thrust_oracle_is_self_consistent():
    assert_allclose(_oracle_thrust(0.0, 50.0), T_MAX_0_50, rtol=1e-14)
    assert_allclose(_oracle_thrust(3048.0, 0.0), T_MAX_3048_0, rtol=1e-14)


def test_coefficients_at_zero_state():
    c = ac.coefficients(0.0, 0.0, 50.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, ac.AeroConfig())
    expected = (-0.0434, 0.0, -0.131, 0.0, -6.61e-3, 0.0)
    for got, want in zip(c, expected):
        assert abs(got - want) <= 1e-12


def test_static_thrust_at_sea_level():
    assert_allclose(ac.max_thrust(0.0, 0.0), 30.21 * 4448.22 / 20.0, rtol=1e-6, atol=0)


@pytest.mark.parametrize("h, V, want", [(0.0, 50.0, T_MAX_0_50), (3048.0, 0.0, T_MAX_3048_0)])
def test_thrust_matches_polynomial_oracle(h, V, want):
    assert_allclose(ac.max_thrust(h, V), want, rtol=1e-9, atol=0)


@given(st.floats(0.0, 6000.0), st.floats(0.0, 150.0))
def test_thrust_agrees_with_oracle_everywhere(h, V):
    want = max(_oracle_thrust(h, V), 0.0)
    assert_allclose(ac.max_thrust(h, V), want, rtol=1e-9, atol=1e-9)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 3000.0), st.floats(20.0, 120.0))
def test_thrust_scales_with_throttle_and_power(dth, pf, h, V):
    assert_allclose(ac.thrust(dth, h, V, pf), dth * pf * ac.max_thrust(h, V), rtol=1e-12, atol=1e-9)


def test_inertia_coefficients_from_definition():
    cfg = ac.AeroConfig()
    Ix, Iy, Iz, Ixz = cfg.I_X, cfg.I_Y, cfg.I_Z, cfg.I_XZ
    gamma = Ix * Iz - Ixz**2
    ic = ac.inertia_coefficients(cfg)
    assert_allclose(ic.c3, Iz / gamma, rtol=1e-14)
    assert_allclose(ic.c4, Ixz / gamma, rtol=1e-14)
    assert_allclose(ic.c7, 1.0 / Iy, rtol=1e-14)
    assert_allclose(ic.c9, Ix / gamma, rtol=1e-14)


def test_scaling_rejects_out_of_range():
    with pytest.raises(ValueError, match="Cm_dE1"):
        ac.DerivativeScaling(Cm_dE1=1.2)


@settings(deadline=None)
@given(st.floats(0.0, 1.0), st.floats(-10.0, 10.0))
def test_elevator_efficiency_scales_its_pitching_term(factor, de):
    cfg = ac.AeroConfig()
    scale = ac.DerivativeScaling().scaled(["Cm_dE1"], factor).as_array()
    healthy = ac.coefficients(2.0, 0.0, 50.0, 0, 0, 0, 0.0, de, 0.0, cfg)[4]
    faulty = ac.coefficients(2.0, 0.0, 50.0, 0, 0, 0, 0.0, de, 0.0, cfg, scale)[4]
    assert_allclose(healthy - faulty, -(1.0 - factor) * 6.54e-3 * de, atol=1e-15)


def test_alpha_outside_fit_warns():
    env = ac.AeroEnvironmentState(V_t=50.0, alpha=20.0, beta=0.0, q_bar=1000.0)
    with pytest.warns(ac.ModelValidityWarning):
        ac.force_moment_coefficients(env, ac.ControlVector(), (0.0, 0.0, 0.0))


def test_nonpositive_airspeed_rejected():
    env = ac.AeroEnvironmentState(V_t=0.0, alpha=0.0, beta=0.0, q_bar=0.0)
    with pytest.raises(ValueError):
        ac.force_moment_coefficients(env, ac.ControlVector(), (0.0, 0.0, 0.0))


@given(st.floats(-np.pi, np.pi), st.floats(-1.4, 1.4), st.floats(-np.pi, np.pi))
def test_dcm_is_orthonormal(phi, theta, psi):
    C = ac.dcm_body_from_ned(phi, theta, psi)
    assert_allclose(C @ C.T, np.eye(3), atol=1e-12)
    assert_allclose(np.linalg.det(C), 1.0, atol=1e-12)


def test_trim_is_an_equilibrium():
    trim = ac.trim_longitudinal(50.0, 100.0, 0.0)
    x = trim.state(50.0, 100.0)
    xdot = ac.state_derivative_longitudinal(x, np.array([trim.delta_th, trim.delta_e]))
    # position rate is the flight path; velocities, attitude and rate are steady
    assert_allclose(xdot[1:], 0.0, atol=1e-6)


def test_longitudinal_embedding_matches_6dof():
    trim = ac.trim_longitudinal(50.0, 100.0, 0.0)
    x = trim.state(50.0, 100.0)
    x[4] = 0.01
    u = np.array([trim.delta_th, trim.delta_e + 1.0])
    f_long = ac.state_derivative_longitudinal(x, u)
    x6 = ac.embed_longitudinal(x)
    u6 = np.array([u[0], 0.0, u[1], 0.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ac.ModelValidityWarning)
        f6 = ac.state_derivative_6dof(x6, u6)
    idx = [ac.STATE_NAMES.index(n) for n in ac.LONG_STATE_NAMES]
    assert_allclose(f_long, f6[idx], rtol=1e-9, atol=1e-12)
