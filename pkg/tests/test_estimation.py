import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from ftcsim import aircraft as ac
from ftcsim import estimation as est


def test_one_dimensional_sigma_points():
    # kappa = 3 - n = 2, lambda = 2, so the spread is sqrt(n + lambda) = sqrt(3)
    X, Wm, Wc = est.sigma_points([0.0], [[1.0]])
    assert_allclose(np.sort(X[:, 0]), [-np.sqrt(3.0), 0.0, np.sqrt(3.0)])
    assert_allclose(Wm, [2 / 3, 1 / 6, 1 / 6])
    assert_allclose(Wc, [2 / 3 + 2.0, 1 / 6, 1 / 6])


def test_zero_covariance_collapses_sigma_points():
    X, _, _ = est.sigma_points([1.0, -2.0], np.zeros((2, 2)))
    assert_allclose(X, np.tile([1.0, -2.0], (5, 1)))


def test_indefinite_covariance_raises():
    with pytest.raises(np.linalg.LinAlgError):
        est.sigma_points([0.0, 0.0], [[1.0, 0.0], [0.0, -1.0]])


def _spd(n, seed):
    A = np.random.default_rng(seed).standard_normal((n, n))
    return A @ A.T + n * np.eye(n)


@settings(deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_sigma_points_reproduce_mean_and_covariance(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal(n)
    P = _spd(n, seed)
    X, Wm, Wc = est.sigma_points(m, P)
    assert_allclose(Wm.sum(), 1.0, rtol=1e-12)
    mean, cov = est.unscented_moments(X, Wm, Wc)
    assert_allclose(mean, m, atol=1e-12)
    assert_allclose(cov, P, rtol=1e-10, atol=1e-10)


def test_config_validation():
    with pytest.raises(ValueError, match="symmetric"):
        est.UkfConfig(np.array([[1.0, 0.5], [0.0, 1.0]]), np.eye(1))
    with pytest.raises(ValueError, match="positive definite"):
        est.UkfConfig(np.eye(2), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        est.UkfConfig(np.eye(2), np.eye(1), dt=0.0)


def test_linear_ukf_update_matches_kalman_formulas():
    P0 = np.diag([2.0, 1.0])
    cfg = est.UkfConfig(np.zeros((2, 2)), np.diag([3.0, 2.0]))
    state = est.ukf_update(est.UkfState(np.zeros(2), P0), [1.0, 2.0], lambda X: X, cfg)
    assert_allclose(state.x, [1 * 2 / (2 + 3), 2 * 1 / (1 + 2)])
    assert_allclose(state.P, np.diag([1 / (1 / 2 + 1 / 3), 1 / (1 / 1 + 1 / 2)]), atol=1e-15)
    assert_allclose(state.S, np.diag([5.0, 3.0]), atol=1e-15)


def test_nonfinite_prediction_marks_divergence():
    cfg = est.UkfConfig(np.eye(1), np.eye(1))
    state = est.ukf_predict(est.UkfState(np.zeros(1), np.eye(1)), lambda X, dt: X * np.nan, cfg)
    assert state.diverged
    # a diverged filter stays put
    again = est.ukf_update(state, [0.0], lambda X: X, cfg)
    assert again is state


def test_nonfinite_measurement_rejected():
    cfg = est.UkfConfig(np.eye(1), np.eye(1))
    with pytest.raises(ValueError):
        est.ukf_update(est.UkfState(np.zeros(1), np.eye(1)), [np.inf], lambda X: X, cfg)


def test_rk4_model_for_linear_system_is_taylor_polynomial():
    A = np.array([[0.0, 1.0], [-4.0, -0.4]])
    dt = 0.1
    model = est.rk4_model(lambda X: X @ A.T)
    Ad = A * dt
    F = np.eye(2) + Ad + Ad @ Ad / 2 + Ad @ Ad @ Ad / 6 + Ad @ Ad @ Ad @ Ad / 24
    X = np.random.default_rng(0).standard_normal((5, 2))
    assert_allclose(model(X, dt), X @ F.T, rtol=1e-13)


# -- fault detection -------------------------------------------------------


def _run_fdi(n_strikes, **kw):
    fdi = est.ThrustFdiState(**kw)
    for k in range(n_strikes):
        fdi = est.thrust_fdi_step(fdi, demand=2000.0, estimate=1000.0, sigma=100.0, t=0.01 * k)
    return fdi


def test_flag_needs_counter_above_threshold():
    assert _run_fdi(200).counter == 200
    assert not _run_fdi(200).flag
    fdi = _run_fdi(201)
    assert fdi.flag
    assert fdi.flag_time == pytest.approx(2.0)


def test_two_sigma_margin_is_respected():
    fdi = est.thrust_fdi_step(est.ThrustFdiState(), 1200.0, 1000.0, 100.0)
    assert fdi.counter == 0  # exactly on the margin does not count
    fdi = est.thrust_fdi_step(fdi, 1200.1, 1000.0, 100.0)
    assert fdi.counter == 1


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        est.thrust_fdi_step(est.ThrustFdiState(), 1.0, 1.0, -1.0)


@given(st.lists(st.tuples(st.floats(0, 5000), st.floats(0, 5000), st.floats(0, 500)),
                max_size=400))
def test_flag_is_monotone_and_counter_never_decreases(seq):
    fdi = est.ThrustFdiState(threshold=20)
    for demand, estimate, sigma in seq:
        nxt = est.thrust_fdi_step(fdi, demand, estimate, sigma)
        assert nxt.counter >= fdi.counter
        assert nxt.flag or not fdi.flag
        fdi = nxt


def test_reset_on_clear_restarts_count():
    fdi = _run_fdi(50, reset_on_clear=True)
    fdi = est.thrust_fdi_step(fdi, 0.0, 1000.0, 10.0)
    assert fdi.counter == 0


# -- filter variants -------------------------------------------------------


@pytest.mark.parametrize("variant, n", [("30-state", 30), ("19-state", 19), ("12-state", 12),
                                        ("9-state", 9), ("roll-3", 3), ("pitch-3", 3),
                                        ("yaw-3", 3), ("thrust-4", 4)])
def test_variant_dimensions(variant, n):
    f = est.build_filter_variant(variant)
    assert f.config.n == n
    assert f.x0.shape == (n,)
    assert f.P0.shape == (n, n)


def test_grouped_variant_covers_every_derivative_once():
    members = [m for g in est.GROUPED_DERIVATIVES.values() for m in g]
    assert sorted(members) == sorted(ac.DERIVATIVE_NAMES)
    assert len(est.GROUPED_DERIVATIVES) == 13


def test_bank_splits_into_three_filters():
    bank = est.build_filter_bank("3x3-state")
    assert [f.variant_id for f in bank] == ["roll-3", "pitch-3", "yaw-3"]
    with pytest.raises(ValueError):
        est.build_filter_variant("7-state")


def _rate_inputs():
    return est.RateFilterInputs(V_t=50.0, alpha=3.0, beta=0.5, qbar=0.5 * 1.2 * 2500.0,
                                delta_a=2.0, delta_e=-3.0, delta_r=1.0, thrust=2000.0,
                                p=0.05, q=0.02, r=-0.01)


@pytest.mark.parametrize("variant", ["30-state", "12-state", "9-state", "pitch-3"])
def test_healthy_derivative_states_reproduce_plant_rates(variant):
    # at unit derivative states the filter's rate model is the plant's
    f = est.build_filter_variant(variant)
    u = _rate_inputs()
    x = f.x0.copy()
    for name in est.RATE_NAMES:
        if name in f.state_names:
            x[f.index(name)] = getattr(u, name)
    X = f.process(x[None, :], 0.01, u)[0]
    cfg = ac.AeroConfig()
    ic = ac.inertia_coefficients(cfg)

    def rates(w):
        c = ac.coefficients(u.alpha, u.beta, u.V_t, *w, u.delta_a, u.delta_e, u.delta_r, cfg)
        return np.array(ac.rotational_acceleration(*w, u.qbar, c[3], c[4], c[5], cfg, ic))

    kin = [n for n in est.RATE_NAMES if n in f.state_names]
    cols = [est.RATE_NAMES.index(n) for n in kin]

    def sub(r):
        w = u.rates.copy()
        w[cols] = r
        return rates(w)[cols]

    want = ac.rk4_step(sub, u.rates[cols], 0.01)
    assert_allclose(X[[f.index(n) for n in kin]], want, rtol=1e-12, atol=1e-14)


def test_thrust_filter_tracks_constant_thrust():
    f = est.thrust_filter()
    trim = ac.trim_longitudinal(50.0, 100.0)
    x = trim.state(50.0, 100.0)
    u_plant = np.array([trim.delta_th, trim.delta_e])
    rng = np.random.default_rng(1)
    s = f.initial_state()
    inputs = est.ThrustFilterInputs(0.0, trim.delta_e, 100.0)
    for _ in range(2000):
        x = ac.integrate_step(x, u_plant, None, 0.01, plant="longitudinal")
        z = np.array([np.hypot(x[1], x[2]), x[2], x[3]]) + rng.normal(0, [0.05, 0.05, 0.017])
        inputs = est.ThrustFilterInputs(float(x[4]), trim.delta_e, float(-x[0]))
        s = f.step(s, z, inputs)
    assert abs(s.x[3] - trim.thrust) < 0.05 * ac.max_thrust(0.0, 0.0)


@settings(deadline=None, max_examples=20)
@given(arrays(float, 3, elements=st.floats(-3.0, 3.0)))
def test_specific_force_at_rest_in_level_trim_balances_gravity_axis(rates):
    trim = ac.trim_longitudinal(50.0, 100.0)
    x = ac.embed_longitudinal(trim.state(50.0, 100.0))
    u = np.array([trim.delta_th, 0.0, trim.delta_e, 0.0])
    sf = est.specific_force(x, u)
    # in trim the specific force is the negative of gravity in body axes
    g_b = ac.dcm_body_from_ned(0.0, trim.theta, 0.0) @ np.array([0.0, 0.0, ac.G0])
    assert_allclose(sf, -g_b, atol=1e-6)
