import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings
from numpy.testing import assert_allclose
from scipy.optimize import minimize

from ftcsim import aircraft as ac
from ftcsim import nmpc
from ftcsim.guidance import LongitudinalReference
from ftcsim.sqp import CONVERGED, solve_box_qp, solve_nlp


def _long_ocp(thrust_upper=6000.0, t_now=10.0):
    trim = ac.trim_longitudinal(50.0, 100.0)
    x0 = np.concatenate([trim.state(50.0, 100.0), [trim.thrust, trim.delta_e, 0.0, 0.0]])
    return nmpc.build_longitudinal_ocp(nmpc.LongitudinalOcpConfig(), x0, LongitudinalReference(),
                                       t_now, thrust_upper)


def _rate_ocp(scale=None):
    trim = ac.trim_longitudinal(50.0, 100.0)
    x = ac.embed_longitudinal(trim.state(50.0, 100.0))
    cond = nmpc.FlightCondition.from_state(x, thrust=trim.thrust)
    x0 = np.zeros(12)
    x0[6] = trim.delta_e
    return nmpc.build_rate_ocp(nmpc.RateOcpConfig(), x0, [5.0, 1.0, 0.5], cond, scale=scale)


def _fd_gradient(ocp, z, h=1e-6):
    g = np.empty_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (ocp.objective(z + e) - ocp.objective(z - e)) / (2 * h)
    return g


@pytest.mark.parametrize("make", [_long_ocp, _rate_ocp])
def test_cost_gradient_matches_finite_differences(make):
    ocp = make()
    rng = np.random.default_rng(0)
    z_ref = ocp.initial_guess()
    worst = 0.0
    for _ in range(50):
        z = z_ref + 0.1 * rng.standard_normal(z_ref.size)
        _, grad, _, _, _ = ocp.linearize(z)
        fd = _fd_gradient(ocp, z)
        worst = max(worst, np.max(np.abs(grad - fd)) / max(1.0, np.max(np.abs(fd))))
    assert worst <= 1e-5


def test_defect_jacobian_matches_finite_differences():
    ocp = _long_ocp()
    z = ocp.initial_guess() + 0.05 * np.random.default_rng(2).standard_normal(ocp.n)
    _, _, _, c, A = ocp.linearize(z)
    h = 1e-6
    cols = np.random.default_rng(3).choice(ocp.n, 25, replace=False)
    for i in cols:
        e = np.zeros(ocp.n)
        e[i] = h
        fd = (ocp.constraints(z + e) - ocp.constraints(z - e)) / (2 * h)
        assert_allclose(A[:, i], fd, rtol=1e-5, atol=1e-6)
    assert_allclose(c, ocp.constraints(z))


def test_node_zero_is_pinned_to_measured_state():
    ocp = _long_ocp()
    sol = nmpc.solve(ocp)
    assert sol.converged
    assert_allclose(sol.states[0], ocp.x0, atol=1e-9)


@pytest.mark.parametrize("make", [_long_ocp, _rate_ocp])
def test_converged_solution_is_clean(make):
    sol = nmpc.solve(make())
    assert sol.status == CONVERGED
    assert sol.defect <= 1e-6
    assert sol.bound_violation <= 1e-6


def test_tight_thrust_ceiling_is_respected():
    sol = nmpc.solve(_long_ocp(thrust_upper=1500.0))
    assert np.all(sol.states[1:, 5] <= 1500.0 + 1e-6)


def test_rate_solution_moves_toward_demand():
    sol = nmpc.solve(_rate_ocp())
    assert sol.converged
    assert sol.states[-1, 0] > 0.5 * 5.0  # roll rate heads for +5 deg/s


def test_bad_inputs_rejected():
    with pytest.raises(ValueError):
        nmpc.build_longitudinal_ocp(nmpc.LongitudinalOcpConfig(), np.zeros(8),
                                    LongitudinalReference(), 0.0, 100.0)
    with pytest.raises(ValueError):
        _long_ocp(thrust_upper=-1.0)
    with pytest.raises(ValueError):
        nmpc.RateOcpConfig(horizon=0.0)


# -- QP and SQP on small problems with known answers ----------------------


@settings(deadline=None, max_examples=30)
@given(st.integers(0, 10_000))
def test_box_qp_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    n, m = 6, 2
    M = rng.standard_normal((n, n))
    H = M @ M.T + np.eye(n)
    g = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    b = A @ rng.uniform(-0.5, 0.5, n)
    lb, ub = -np.ones(n), np.ones(n)
    qp = solve_box_qp(H, g, A, b, lb, ub)
    assert qp.ok
    ref = minimize(lambda x: 0.5 * x @ H @ x + g @ x, np.zeros(n), jac=lambda x: H @ x + g,
                   method="SLSQP", bounds=list(zip(lb, ub)),
                   constraints=[{"type": "eq", "fun": lambda x: A @ x - b, "jac": lambda x: A}],
                   options={"ftol": 1e-14, "maxiter": 500})
    f = lambda x: 0.5 * x @ H @ x + g @ x
    assert f(qp.x) <= f(ref.x) + 1e-7
    assert_allclose(A @ qp.x, b, atol=1e-8)
    assert np.all(qp.x >= lb - 1e-9) and np.all(qp.x <= ub + 1e-9)


class _Circle:
    """min (x-2)^2 + (y-1)^2 on the unit circle with x <= 0.5; answer (0.5, sqrt(3)/2)."""

    lb = np.array([-2.0, -2.0])
    ub = np.array([0.5, 2.0])

    def objective(self, z):
        return float((z[0] - 2) ** 2 + (z[1] - 1) ** 2)

    def constraints(self, z):
        return np.array([z[0] ** 2 + z[1] ** 2 - 1.0])

    def linearize(self, z):
        g = np.array([2 * (z[0] - 2), 2 * (z[1] - 1)])
        A = np.array([[2 * z[0], 2 * z[1]]])
        return self.objective(z), g, 2 * np.eye(2), self.constraints(z), A


def test_sqp_solves_small_constrained_problem():
    res = solve_nlp(_Circle(), np.array([0.0, 0.5]))
    assert res.status == CONVERGED
    assert_allclose(res.z, [0.5, np.sqrt(3) / 2], atol=1e-6)


def test_inconsistent_box_reported():
    p = _Circle()
    p.lb = np.array([1.0, -2.0])
    p.ub = np.array([0.5, 2.0])
    assert solve_nlp(p, np.zeros(2)).status != CONVERGED


def test_controller_thrust_ceiling_tracks_power_estimate():
    ctl = nmpc.LongitudinalController(nmpc.LongitudinalOcpConfig(), LongitudinalReference())
    t_max = float(ac.max_thrust(150.0, 50.0))
    assert ctl.thrust_ceiling(150.0, 50.0, False) == pytest.approx(t_max)
    # one second of steady throttle lets the estimate through
    for _ in range(20):
        up = ctl.thrust_ceiling(150.0, 50.0, True, 0.35 * t_max * 0.6, 10.0, applied_throttle=0.6)
    assert ctl.power_estimate == pytest.approx(0.35, rel=1e-9)
    assert up == pytest.approx(0.35 * t_max + 20.0)
