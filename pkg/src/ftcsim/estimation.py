"""Unscented Kalman filtering, the thrust FDI filter and the control-derivative filters.

The filter core is functional: ``ukf_predict`` and ``ukf_update`` take a
``UkfState`` and return a new one. Process models are discrete maps
``X_next = model(X, dt)`` acting on a whole ``(2n+1, n)`` block of sigma
points; ``rk4_model`` turns a continuous vector field into one.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import aircraft as ac

OK = "ok"
DIVERGED = "diverged"

FILTER_DT = 0.01


# --------------------------------------------------------------------------
# core filter


@dataclass(frozen=True)
class UkfConfig:
    """Noise model and unscented-transform parameters.

    ``kappa=None`` selects ``3 - n``.
    """

    Q: np.ndarray
    R: np.ndarray
    alpha: float = 1.0
    beta: float = 2.0
    kappa: float | None = None
    dt: float = FILTER_DT

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        if Q.shape[0] != Q.shape[1] or R.shape[0] != R.shape[1]:
            raise ValueError("Q and R must be square")
        if not self.dt > 0:
            raise ValueError("filter period must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        for name, M in (("Q", Q), ("R", R)):
            if not np.allclose(M, M.T, atol=1e-12 * (1.0 + np.abs(M).max())):
                raise ValueError(f"{name} must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-12 * (1.0 + np.abs(Q).max()):
            raise ValueError("Q must be positive semidefinite")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be positive definite")

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]

    @property
    def kappa_value(self) -> float:
        return 3.0 - self.n if self.kappa is None else float(self.kappa)


@dataclass(frozen=True)
class UkfState:
    x: np.ndarray
    P: np.ndarray
    nu: np.ndarray | None = None
    S: np.ndarray | None = None
    status: str = OK

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.P), 0.0, None))

    @property
    def innovation_sigma(self) -> np.ndarray | None:
        return None if self.S is None else np.sqrt(np.diag(self.S))

    @property
    def diverged(self) -> bool:
        return self.status == DIVERGED


def ut_weights(n: int, alpha: float = 1.0, beta: float = 2.0, kappa: float | None = None):
    """Scaled unscented-transform weights ``(lambda, Wm, Wc)``."""
    kappa = 3.0 - n if kappa is None else kappa
    lam = alpha * alpha * (n + kappa) - n
    if not n + lam > 0:
        raise ValueError(f"n + lambda = {n + lam} must be positive")
    Wm = np.full(2 * n + 1, 0.5 / (n + lam))
    Wc = Wm.copy()
    Wm[0] = lam / (n + lam)
    Wc[0] = Wm[0] + 1.0 - alpha * alpha + beta
    return lam, Wm, Wc


def _cholesky(M: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with one symmetrize-and-jitter retry."""
    if not np.any(M):
        return np.zeros_like(M)
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        n = M.shape[0]
        M = 0.5 * (M + M.T) + 1e-12 * np.trace(M) / n * np.eye(n)
        try:
            return np.linalg.cholesky(M)
        except np.linalg.LinAlgError as exc:
            raise LinAlgError("covariance is not positive semidefinite") from exc


def sigma_points(mean, P, alpha: float = 1.0, beta: float = 2.0, kappa: float | None = None):
    """Return ``(X, Wm, Wc)`` with ``X`` of shape ``(2n+1, n)``."""
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = mean.size
    lam, Wm, Wc = ut_weights(n, alpha, beta, kappa)
    L = _cholesky((n + lam) * P)
    X = np.empty((2 * n + 1, n))
    X[0] = mean
    X[1:n + 1] = mean + L.T
    X[n + 1:] = mean - L.T
    return X, Wm, Wc


def unscented_moments(Y, Wm, Wc):
    mean = Wm @ Y
    d = Y - mean
    return mean, (d.T * Wc) @ d


def _symmetric(P):
    return 0.5 * (P + P.T)


def rk4_model(f: Callable) -> Callable:
    """Discrete process model from a continuous one ``xdot = f(X, *args)``."""

    def model(X, dt, *args):
        return ac.rk4_step(f, X, dt, *args)

    return model


def ukf_predict(state: UkfState, model: Callable, cfg: UkfConfig, *args) -> UkfState:
    """Time update through ``model(X, dt, *args)``; non-finite propagation flags divergence."""
    if state.diverged:
        return state
    try:
        X, Wm, Wc = sigma_points(state.x, state.P, cfg.alpha, cfg.beta, cfg.kappa_value)
    except LinAlgError:
        return replace(state, status=DIVERGED)
    with np.errstate(all="ignore"):
        try:
            Y = np.asarray(model(X, cfg.dt, *args), dtype=float)
        except (ValueError, FloatingPointError):
            return replace(state, status=DIVERGED)
    if Y.shape != X.shape or not np.all(np.isfinite(Y)):
        return replace(state, status=DIVERGED)
    x, P = unscented_moments(Y, Wm, Wc)
    return UkfState(x, _symmetric(P + cfg.Q), state.nu, state.S, OK)


def ukf_update(state: UkfState, z, measure: Callable, cfg: UkfConfig, *args) -> UkfState:
    """Measurement update; stores the innovation and its covariance."""
    if state.diverged:
        return state
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if not np.all(np.isfinite(z)):
        raise ValueError("measurement must be finite")
    try:
        X, Wm, Wc = sigma_points(state.x, state.P, cfg.alpha, cfg.beta, cfg.kappa_value)
    except LinAlgError:
        return replace(state, status=DIVERGED)
    with np.errstate(all="ignore"):
        Z = np.asarray(measure(X, *args), dtype=float)
    if not np.all(np.isfinite(Z)):
        return replace(state, status=DIVERGED)
    z_hat, S = unscented_moments(Z, Wm, Wc)
    S = _symmetric(S + cfg.R)
    Pxz = ((X - state.x).T * Wc) @ (Z - z_hat)
    try:
        cS = cho_factor(S, lower=True)
    except LinAlgError:
        return replace(state, status=DIVERGED)
    K = cho_solve(cS, Pxz.T).T
    nu = z - z_hat
    x = state.x + K @ nu
    P = _symmetric(state.P - K @ S @ K.T)
    return UkfState(x, P, nu, S, OK)


# --------------------------------------------------------------------------
# fault detection on thrust


@dataclass(frozen=True)
class ThrustFdiState:
    """Counter-based detector: demand above estimate + k sigma counts a strike.

    The flag latches once the counter exceeds ``threshold``.
    """

    counter: int = 0
    flag: bool = False
    threshold: int = 200
    sigma_multiplier: float = 2.0
    reset_on_clear: bool = False
    flag_time: float | None = None

    def __post_init__(self):
        if self.counter < 0 or self.threshold < 0:
            raise ValueError("counter and threshold must be non-negative")


def thrust_fdi_step(fdi: ThrustFdiState, demand: float, estimate: float, sigma: float,
                    t: float | None = None) -> ThrustFdiState:
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if demand > estimate + fdi.sigma_multiplier * sigma:
        counter = fdi.counter + 1
    else:
        counter = 0 if fdi.reset_on_clear else fdi.counter
    flag = fdi.flag or counter > fdi.threshold
    flag_time = fdi.flag_time
    if flag and not fdi.flag:
        flag_time = t
    return replace(fdi, counter=counter, flag=flag, flag_time=flag_time)


# --------------------------------------------------------------------------
# filter variants


@dataclass(frozen=True)
class FilterVariant:
    """A filter definition: names, noise model, initial state, and models.

    ``process(X, dt, inputs)`` and ``measure(X, inputs)`` act on sigma-point
    blocks; ``inputs`` is the exogenous record for the step.
    """

    variant_id: str
    state_names: tuple
    measurement_names: tuple
    config: UkfConfig
    x0: np.ndarray
    P0: np.ndarray
    process: Callable = field(repr=False)
    measure: Callable = field(repr=False)

    def __post_init__(self):
        if len(set(self.state_names)) != len(self.state_names):
            raise ValueError("state names must be unique")
        if len(set(self.measurement_names)) != len(self.measurement_names):
            raise ValueError("measurement names must be unique")
        if len(self.state_names) != self.config.n or self.x0.shape != (self.config.n,):
            raise ValueError("state dimension mismatch")
        if len(self.measurement_names) != self.config.m:
            raise ValueError("measurement dimension mismatch")

    def initial_state(self) -> UkfState:
        return UkfState(self.x0.copy(), self.P0.copy())

    def step(self, state: UkfState, z, inputs) -> UkfState:
        state = ukf_predict(state, self.process, self.config, inputs)
        return ukf_update(state, z, self.measure, self.config, inputs)

    def index(self, name: str) -> int:
        return self.state_names.index(name)


@dataclass(frozen=True)
class ThrustFilterInputs:
    """Exogenous signals for the thrust filter: pitch rate, elevator, height, wind."""

    q: float
    delta_e: float
    height: float
    wind_N: float = 0.0
    wind_D: float = 0.0


THRUST_STATES = ("V_N", "V_D", "theta", "T")
THRUST_MEASUREMENTS = ("V_EAS", "v_D", "theta")


def thrust_filter(dt: float = FILTER_DT, aero: ac.AeroConfig = ac.AeroConfig(),
                  x0=(50.0, 0.0, 0.04247, 1507.7526), P0_sigma=(0.5, 0.5, 0.017, 315.0),
                  R_sigma=(0.05, 0.05, 0.017), **ut) -> FilterVariant:
    """Four-state filter with thrust as a random-walk state."""
    Q = np.diag([(5 * dt * 0.05) ** 2, (5 * dt * 0.05) ** 2, (0.1 * dt) ** 2,
                 (6500 * dt * 0.3) ** 2])
    R = np.diag(np.square(R_sigma))
    ic = ac.inertia_coefficients(aero)

    def f(X, u: ThrustFilterInputs):
        vN, vD, theta, T = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
        x_D = np.full_like(vN, -u.height)
        w = np.array([u.wind_N, u.wind_D])
        vN_dot, vD_dot, _, _ = ac.longitudinal_accelerations(
            x_D, vN, vD, theta, u.q, u.delta_e, T, w, aero, ic=ic)
        return np.stack([vN_dot, vD_dot, np.full_like(vN, u.q), np.zeros_like(vN)], axis=-1)

    def measure(X, u: ThrustFilterInputs):
        V_eas = np.hypot(X[:, 0] - u.wind_N, X[:, 1] - u.wind_D)
        return np.stack([V_eas, X[:, 1], X[:, 2]], axis=-1)

    return FilterVariant("thrust-4", THRUST_STATES, THRUST_MEASUREMENTS,
                         UkfConfig(Q, R, dt=dt, **ut), np.asarray(x0, dtype=float),
                         np.diag(np.square(P0_sigma)), rk4_model(f), measure)


@dataclass(frozen=True)
class RateFilterInputs:
    """Air data, controls and measured rates held over one filter step.

    Angles in degrees, rates in rad/s, thrust in newtons.
    """

    V_t: float
    alpha: float
    beta: float
    qbar: float
    delta_a: float
    delta_e: float
    delta_r: float
    thrust: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0

    @property
    def rates(self) -> np.ndarray:
        return np.array([self.p, self.q, self.r])


@dataclass(frozen=True)
class DerivativeFilterNoise:
    """IMU noise levels and random-walk intensities for the derivative filters."""

    sigma_acc: float = 0.05  # m/s^2
    sigma_rate: float = 0.005  # rad/s
    q_acc: float = 0.05
    q_rate: float = 0.1 * FILTER_DT
    q_param: float = 1e-3
    q_trim: float = 1e-6
    p0_param: float = 0.5
    p0_trim: float = 1e-3
    p0_rate: float = 0.01
    p0_acc: float = 0.1


CM0_NOMINAL = -6.61e-3
TRIM_TERMS = ("Cl_0", "Cm_0", "Cn_0")
ACCEL_NAMES = ("a_x", "a_y", "a_z")
RATE_NAMES = ("p", "q", "r")

#: One state per force/moment per surface.
GROUPED_DERIVATIVES = {
    g: tuple(n for n in ac.DERIVATIVE_NAMES if n.rstrip("0123456789") == g)
    for g in dict.fromkeys(n.rstrip("0123456789") for n in ac.DERIVATIVE_NAMES)
}

_SPLIT = {
    "roll-3": ("p", ("Cl_dA1", "Cn_0")),
    "pitch-3": ("q", ("Cm_dE1", "Cm_0")),
    "yaw-3": ("r", ("Cn_dR1", "Cn_0")),
}
_MOMENTS = ("Cl_dA1", "Cm_dE1", "Cn_dR1") + TRIM_TERMS

VARIANT_IDS = ("30-state", "19-state", "12-state", "9-state", "roll-3", "pitch-3", "yaw-3",
               "thrust-4")
FILTER_BANKS = {"3x3-state": ("roll-3", "pitch-3", "yaw-3")}


def _derivative_layout(variant_id: str):
    """``(kinematic states, parameter states, measured names)``."""
    if variant_id == "30-state":
        return ACCEL_NAMES + RATE_NAMES, ac.DERIVATIVE_NAMES
    if variant_id == "19-state":
        return ACCEL_NAMES + RATE_NAMES, tuple(GROUPED_DERIVATIVES)
    if variant_id == "12-state":
        return ACCEL_NAMES + RATE_NAMES, _MOMENTS
    if variant_id == "9-state":
        return RATE_NAMES, _MOMENTS
    if variant_id in _SPLIT:
        rate, params = _SPLIT[variant_id]
        return (rate,), params
    raise ValueError(f"unknown filter variant {variant_id!r}")


def _parameter_map(params):
    """Matrix ``G`` with ``scale = 1 + (theta - 1) @ G`` plus trim-term column indices."""
    G = np.zeros((len(params), ac.N_DERIVATIVES))
    trim = {}
    for i, name in enumerate(params):
        if name in TRIM_TERMS:
            trim[name] = i
        elif name in ac.DERIVATIVE_INDEX:
            G[i, ac.DERIVATIVE_INDEX[name]] = 1.0
        else:
            for member in GROUPED_DERIVATIVES[name]:
                G[i, ac.DERIVATIVE_INDEX[member]] = 1.0
    return G, trim


def derivative_filter(variant_id: str, noise: DerivativeFilterNoise = DerivativeFilterNoise(),
                      dt: float = FILTER_DT, aero: ac.AeroConfig = ac.AeroConfig(),
                      **ut) -> FilterVariant:
    """Control-derivative filter: kinematic states plus normalized derivative states.

    Rate states follow the rotational model with the current controls and
    air data; derivative states are random walks; acceleration states are
    the specific force implied by the propagated rates and derivatives.
    """
    kin, params = _derivative_layout(variant_id)
    n_acc = sum(k in ACCEL_NAMES for k in kin)
    rate_names = kin[n_acc:]
    rate_cols = [RATE_NAMES.index(k) for k in rate_names]
    n_kin = len(kin)
    G, trim = _parameter_map(params)
    scale_rows = [i for i, p in enumerate(params) if p not in TRIM_TERMS]
    G = G[scale_rows]
    ic = ac.inertia_coefficients(aero)

    def coefficients(W, theta, u: RateFilterInputs):
        scale = 1.0 + (theta[:, scale_rows] - 1.0) @ G
        CX, CY, CZ, Cl, Cm, Cn = ac.coefficients(u.alpha, u.beta, u.V_t, W[:, 0], W[:, 1], W[:, 2],
                                                 u.delta_a, u.delta_e, u.delta_r, aero, scale)
        if "Cl_0" in trim:
            Cl = Cl + theta[:, trim["Cl_0"]]
        if "Cm_0" in trim:
            Cm = Cm + (theta[:, trim["Cm_0"]] - 1.0) * CM0_NOMINAL
        if "Cn_0" in trim:
            Cn = Cn + theta[:, trim["Cn_0"]]
        return CX, CY, CZ, Cl, Cm, Cn

    def full_rates(R, u):
        W = np.tile(u.rates, (R.shape[0], 1))
        W[:, rate_cols] = R
        return W

    def process(X, dt_, u: RateFilterInputs):
        theta = X[:, n_kin:]

        def f(R):
            W = full_rates(R, u)
            _, _, _, Cl, Cm, Cn = coefficients(W, theta, u)
            acc = ac.rotational_acceleration(W[:, 0], W[:, 1], W[:, 2], u.qbar, Cl, Cm, Cn,
                                             aero, ic)
            return np.stack(acc, axis=-1)[:, rate_cols]

        R = ac.rk4_step(f, X[:, n_acc:n_kin], dt_)
        out = X.copy()
        out[:, n_acc:n_kin] = R
        if n_acc:
            CX, CY, CZ, *_ = coefficients(full_rates(R, u), theta, u)
            qS = u.qbar * aero.S
            out[:, 0] = (qS * CX + u.thrust) / aero.mass
            out[:, 1] = qS * CY / aero.mass
            out[:, 2] = qS * CZ / aero.mass
        return out

    def measure(X, u):
        return X[:, :n_kin]

    q_kin = [noise.q_acc] * n_acc + [noise.q_rate] * len(rate_names)
    q_par = [noise.q_trim if p in ("Cl_0", "Cn_0") else noise.q_param for p in params]
    p_kin = [noise.p0_acc] * n_acc + [noise.p0_rate] * len(rate_names)
    p_par = [noise.p0_trim if p in ("Cl_0", "Cn_0") else noise.p0_param for p in params]
    x0 = np.concatenate([np.zeros(n_kin),
                         [0.0 if p in ("Cl_0", "Cn_0") else 1.0 for p in params]])
    R = np.diag(np.square([noise.sigma_acc] * n_acc + [noise.sigma_rate] * len(rate_names)))
    cfg = UkfConfig(np.diag(np.square(q_kin + q_par)), R, dt=dt, **ut)
    return FilterVariant(variant_id, tuple(kin) + tuple(params), tuple(kin), cfg, x0,
                         np.diag(np.square(p_kin + p_par)), process, measure)


def build_filter_variant(variant_id: str, **kwargs) -> FilterVariant:
    if variant_id == "thrust-4":
        return thrust_filter(**kwargs)
    return derivative_filter(variant_id, **kwargs)


def build_filter_bank(bank_id: str, **kwargs) -> tuple[FilterVariant, ...]:
    """Independent filters run side by side, e.g. the roll/pitch/yaw split."""
    if bank_id in FILTER_BANKS:
        return tuple(build_filter_variant(v, **kwargs) for v in FILTER_BANKS[bank_id])
    return (build_filter_variant(bank_id, **kwargs),)


def specific_force(x_plant, u_plant, wind=None, aero: ac.AeroConfig = ac.AeroConfig(),
                   scale=None, power_factor: float = 1.0) -> np.ndarray:
    """Body-axis specific force an accelerometer would read (m/s^2)."""
    x = np.asarray(x_plant, dtype=float)
    u = np.asarray(u_plant, dtype=float)
    V_n = x[3:6] - (0.0 if wind is None else np.asarray(wind, dtype=float))
    C = ac.dcm_body_from_ned(x[6], x[7], x[8])
    V_t, alpha, beta = ac.air_data(C @ V_n)
    height = -x[2]
    qbar = 0.5 * ac.air_density(height) * V_t * V_t
    CX, CY, CZ, *_ = ac.coefficients(alpha, beta, V_t, x[9], x[10], x[11],
                                     u[1], u[2], u[3], aero, scale)
    T = ac.thrust(u[0], max(height, 0.0), V_t, power_factor)
    qS = qbar * aero.S
    return np.array([qS * CX + T, qS * CY, qS * CZ]) / aero.mass
