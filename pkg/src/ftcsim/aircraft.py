"""Generic F-4-derived aircraft plant.

Aerodynamic polynomials valid for alpha <= 15 deg, Bryson-style thrust fit,
flat-earth 6DoF equations of motion and the longitudinal restriction used by
the engine-failure experiments.

Angles (alpha, beta) and surface deflections enter the coefficient
polynomials in degrees. Body rates are rad/s everywhere; the ``180/pi``
factors inside the rate terms take care of the conversion.

All array functions broadcast over leading dimensions so the same code serves
the plant, the NMPC prediction model and the UKF sigma points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np

G0 = 9.80665
RHO0 = 1.225
SPEED_OF_SOUND = 340.3
LBF_SCALE = 4448.22 / 20.0
ALPHA_MAX_DEG = 15.0
THETA_GUARD = 1e-6

RAD2DEG = 180.0 / np.pi

#: Control-derivative terms of the coefficient polynomials, in table order.
DERIVATIVE_NAMES = (
    "CX_dE1", "CX_dE2",
    "CY_dE1", "CY_dR1", "CY_dR2",
    "CZ_dE1", "CZ_dE2", "CZ_dA1",
    "Cl_dA1", "Cl_dA2", "Cl_dA3", "Cl_dR1", "Cl_dR2", "Cl_dE1",
    "Cm_dE1", "Cm_dE2", "Cm_dE3", "Cm_dA1",
    "Cn_dA1", "Cn_dA2", "Cn_dE1", "Cn_dE2", "Cn_dR1", "Cn_dR2",
)
N_DERIVATIVES = len(DERIVATIVE_NAMES)
DERIVATIVE_INDEX = {name: i for i, name in enumerate(DERIVATIVE_NAMES)}

#: Derivatives belonging to each control surface.
SURFACE_DERIVATIVES = {
    "elevator": tuple(n for n in DERIVATIVE_NAMES if "_dE" in n),
    "aileron": tuple(n for n in DERIVATIVE_NAMES if "_dA" in n),
    "rudder": tuple(n for n in DERIVATIVE_NAMES if "_dR" in n),
}
#: Primary-effect derivative of each surface.
PRIMARY_DERIVATIVE = {"elevator": "Cm_dE1", "aileron": "Cl_dA1", "rudder": "Cn_dR1"}

STATE_NAMES = ("x_N", "x_E", "x_D", "V_N", "V_E", "V_D", "phi", "theta", "psi", "p", "q", "r")
LONG_STATE_NAMES = ("x_D", "V_N", "V_D", "theta", "q")


class ModelValidityWarning(UserWarning):
    """Angle of attack outside the range the polynomials were fitted on."""


@dataclass(frozen=True)
class AeroConfig:
    S: float = 20.0
    c_bar: float = 3.0
    b: float = 20.0 / 3.0  # not published; rectangular-wing S / c_bar
    mass: float = 1177.0
    I_X: float = 2257.0
    I_Y: float = 11044.0
    I_Z: float = 12636.0
    I_XZ: float = 106.0
    x_cg: float = 0.0
    x_cg_ref: float = 0.0
    h_eng: float = 0.0

    def __post_init__(self):
        for name in ("S", "c_bar", "b", "mass", "I_X", "I_Y", "I_Z"):
            if not getattr(self, name) > 0:
                raise ValueError(f"AeroConfig.{name} must be positive")
        if self.I_X * self.I_Z - self.I_XZ**2 <= 0:
            raise ValueError("inertia tensor is not positive definite")


@dataclass(frozen=True)
class DerivativeScaling:
    """Multiplicative efficiency per control derivative (1 = healthy)."""

    CX_dE1: float = 1.0
    CX_dE2: float = 1.0
    CY_dE1: float = 1.0
    CY_dR1: float = 1.0
    CY_dR2: float = 1.0
    CZ_dE1: float = 1.0
    CZ_dE2: float = 1.0
    CZ_dA1: float = 1.0
    Cl_dA1: float = 1.0
    Cl_dA2: float = 1.0
    Cl_dA3: float = 1.0
    Cl_dR1: float = 1.0
    Cl_dR2: float = 1.0
    Cl_dE1: float = 1.0
    Cm_dE1: float = 1.0
    Cm_dE2: float = 1.0
    Cm_dE3: float = 1.0
    Cm_dA1: float = 1.0
    Cn_dA1: float = 1.0
    Cn_dA2: float = 1.0
    Cn_dE1: float = 1.0
    Cn_dE2: float = 1.0
    Cn_dR1: float = 1.0
    Cn_dR2: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"scaling factor {f.name}={v} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in DERIVATIVE_NAMES])

    @classmethod
    def from_array(cls, values) -> "DerivativeScaling":
        return cls(**dict(zip(DERIVATIVE_NAMES, (float(v) for v in values))))

    def scaled(self, names, factor: float) -> "DerivativeScaling":
        """Return a copy with ``names`` multiplied by ``factor``."""
        return replace(self, **{n: getattr(self, n) * factor for n in names})


@dataclass(frozen=True)
class CoeffSet:
    CX: float
    CY: float
    CZ: float
    Cl: float
    Cm: float
    Cn: float

    def as_array(self) -> np.ndarray:
        return np.array([self.CX, self.CY, self.CZ, self.Cl, self.Cm, self.Cn])


@dataclass(frozen=True)
class InertiaCoefficients:
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    c7: float
    c8: float
    c9: float


@dataclass(frozen=True)
class AeroEnvironmentState:
    V_t: float
    alpha: float  # deg
    beta: float  # deg
    q_bar: float
    rho: float = RHO0


@dataclass
class ControlVector:
    delta_th: float = 0.0
    delta_a: float = 0.0  # deg
    delta_e: float = 0.0  # deg
    delta_r: float = 0.0  # deg

    def as_array(self) -> np.ndarray:
        return np.array([self.delta_th, self.delta_a, self.delta_e, self.delta_r])

    @classmethod
    def from_array(cls, u) -> "ControlVector":
        return cls(*(float(v) for v in u))

    def validate(self, surface_limit: float = 20.0) -> None:
        if not 0.0 <= self.delta_th <= 1.0:
            raise ValueError(f"delta_th={self.delta_th} outside [0, 1]")
        for name in ("delta_a", "delta_e", "delta_r"):
            if abs(getattr(self, name)) > surface_limit:
                raise ValueError(f"{name} exceeds +/-{surface_limit} deg")


@dataclass
class AircraftState:
    x_N: float = 0.0
    x_E: float = 0.0
    x_D: float = 0.0
    V_N: float = 0.0
    V_E: float = 0.0
    V_D: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in STATE_NAMES])

    @classmethod
    def from_array(cls, x) -> "AircraftState":
        return cls(*(float(v) for v in x))


# --------------------------------------------------------------------------
# atmosphere and thrust


def air_density(height):
    """ISA troposphere density (kg/m^3); heights below sea level use sea level."""
    h = np.clip(height, 0.0, 11000.0)
    return RHO0 * (1.0 - 2.25577e-5 * h) ** 4.25588


_THRUST_POLY = np.array([
    [30.21, -0.668, -6.877, 1.951, -0.1512],
    [-33.8, 3.347, 18.13, -5.865, 0.4757],
    [100.8, -77.56, 5.441, 2.864, -0.3355],
    [-78.99, 101.4, -30.28, 3.236, -0.1089],
    [18.74, -31.6, 12.04, -1.785, 0.09417],
])


def max_thrust(height, V_t):
    """Maximum available thrust (N) at ``height`` (m) and true airspeed (m/s)."""
    h_t = np.asarray(height, dtype=float) / 3048.0
    mach = np.asarray(V_t, dtype=float) / SPEED_OF_SOUND
    total = 0.0
    for row in _THRUST_POLY[::-1]:
        inner = row[0] + h_t * (row[1] + h_t * (row[2] + h_t * (row[3] + h_t * row[4])))
        total = total * mach + inner
    return np.maximum(total * LBF_SCALE, 0.0)


def thrust(delta_th, height, V_t, power_factor=1.0):
    """Delivered thrust; ``power_factor`` is the remaining engine power (1 = healthy)."""
    return max_thrust(height, V_t) * delta_th * power_factor


# --------------------------------------------------------------------------
# aerodynamics


def inertia_coefficients(cfg: AeroConfig) -> InertiaCoefficients:
    Ix, Iy, Iz, Ixz = cfg.I_X, cfg.I_Y, cfg.I_Z, cfg.I_XZ
    gamma = Ix * Iz - Ixz**2
    if gamma <= 0:
        raise ValueError("I_X*I_Z - I_XZ^2 must be positive")
    return InertiaCoefficients(
        c1=((Iy - Iz) * Iz - Ixz**2) / gamma,
        c2=((Ix - Iy + Iz) * Ixz) / gamma,
        c3=Iz / gamma,
        c4=Ixz / gamma,
        c5=(Iz - Ix) / Iy,
        c6=Ixz / Iy,
        c7=1.0 / Iy,
        c8=(Ix * (Ix - Iy) + Ixz**2) / gamma,
        c9=Ix / gamma,
    )


def coefficients(alpha, beta, V_t, p, q, r, da, de, dr, cfg: AeroConfig, scale=None):
    """Array form of the six coefficient polynomials.

    ``scale`` is None (all healthy) or an array broadcastable to ``(..., 24)``
    in ``DERIVATIVE_NAMES`` order. Returns ``(CX, CY, CZ, Cl, Cm, Cn)``.
    """
    a, b = alpha, beta
    if scale is None:
        s = np.ones(N_DERIVATIVES)
    else:
        s = np.asarray(scale, dtype=float)
    s = np.moveaxis(s, -1, 0)
    kq = RAD2DEG * q * cfg.c_bar / (2.0 * V_t)
    kb = RAD2DEG * cfg.b / (2.0 * V_t)
    a2 = a * a
    b2 = b * b

    CX = (-0.0434 + 2.93e-3 * a + 2.53e-5 * b2 - 1.07e-6 * a * b2
          + s[0] * 9.5e-4 * de - s[1] * 8.5e-7 * de * b2
          + kq * (8.73e-3 + 0.001 * a - 1.75e-4 * a2))
    CY = (-0.012 * b + s[3] * 1.55e-3 * dr - s[4] * 8e-6 * dr * a
          + kb * (2.25e-3 * p + 0.0117 * r - 3.67e-4 * r * a + s[2] * 1.75e-4 * r * de))
    CZ = (-0.131 - 0.0538 * a - s[5] * 4.76e-3 * de - s[6] * 3.3e-5 * de * a
          - s[7] * 7.5e-5 * da * da
          + kq * (-0.111 + 5.17e-3 * a - 1.1e-3 * a2))
    Cl = (-5.98e-4 * b - 2.83e-4 * a * b + 1.51e-5 * a2 * b
          - da * (s[8] * 6.1e-4 + s[9] * 2.5e-5 * a - s[10] * 2.6e-6 * a2)
          + dr * (-s[11] * 2.3e-4 + s[12] * 4.5e-6 * a)
          + kb * (-4.2e-3 * p - 5.24e-4 * p * a + 4.36e-5 * p * a2
                  + 4.36e-4 * r + 1.05e-4 * r * a + s[13] * 5.24e-5 * r * de))
    lever = cfg.x_cg_ref - cfg.x_cg
    Cm = (-6.61e-3 - 2.67e-3 * a - 6.48e-5 * b2 - 2.65e-6 * a * b2
          - s[14] * 6.54e-3 * de - s[15] * 8.49e-5 * de * a
          + s[16] * 3.74e-6 * de * b2 - s[17] * 3.5e-5 * da * da
          + kq * (-0.0473 - 1.57e-3 * a)
          + lever * CZ)
    Cn = (2.28e-3 * b + 1.79e-6 * b2 * b + s[18] * 1.4e-5 * da
          + s[19] * 7.0e-6 * da * a - s[22] * 9.0e-4 * dr + s[23] * 4.0e-6 * dr * a
          + kb * (-6.63e-5 * p - 1.92e-5 * p * a + 5.06e-6 * p * a2
                  - 6.06e-3 * r - s[20] * 8.73e-5 * r * de + s[21] * 8.7e-6 * r * de * a)
          - (cfg.c_bar / cfg.b) * lever * CZ)
    return CX, CY, CZ, Cl, Cm, Cn


def force_moment_coefficients(env: AeroEnvironmentState, u: ControlVector, rates,
                              cfg: AeroConfig = AeroConfig(),
                              scale: DerivativeScaling | None = None) -> CoeffSet:
    """Evaluate the coefficient polynomials at a single flight condition.

    ``rates`` is the body-rate triple (p, q, r) in rad/s.
    """
    if not env.V_t > 0:
        raise ValueError("true airspeed must be positive")
    if env.alpha > ALPHA_MAX_DEG:
        warnings.warn(f"alpha={env.alpha:.2f} deg exceeds the {ALPHA_MAX_DEG} deg model range",
                      ModelValidityWarning, stacklevel=2)
    p, q, r = rates
    s = None if scale is None else scale.as_array()
    vals = coefficients(env.alpha, env.beta, env.V_t, p, q, r,
                        u.delta_a, u.delta_e, u.delta_r, cfg, s)
    return CoeffSet(*(float(v) for v in vals))


def air_data(V_air_b):
    """True airspeed (m/s), alpha and beta (deg) from body-axis air velocity."""
    u, v, w = V_air_b[..., 0], V_air_b[..., 1], V_air_b[..., 2]
    V_t = np.sqrt(u * u + v * v + w * w)
    alpha = RAD2DEG * np.arctan2(w, u)
    beta = RAD2DEG * np.arcsin(np.clip(v / V_t, -1.0, 1.0))
    return V_t, alpha, beta


def dcm_body_from_ned(phi, theta, psi):
    """Rotation matrix taking NED vectors to body axes, shape (..., 3, 3)."""
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    return np.stack([
        np.stack([ct * cp, ct * sp, -st], axis=-1),
        np.stack([sf * st * cp - cf * sp, sf * st * sp + cf * cp, sf * ct], axis=-1),
        np.stack([cf * st * cp + sf * sp, cf * st * sp - sf * cp, cf * ct], axis=-1),
    ], axis=-2)


def rotational_acceleration(p, q, r, qbar, Cl, Cm, Cn, cfg: AeroConfig, ic: InertiaCoefficients):
    """Euler's rotational equations with the moment coefficients already evaluated."""
    L = qbar * cfg.S * cfg.b * Cl
    N = qbar * cfg.S * cfg.b * Cn
    M = qbar * cfg.S * cfg.c_bar * Cm
    h = cfg.h_eng
    p_dot = (ic.c1 * r + ic.c2 * p + ic.c4 * h) * q + ic.c3 * L + ic.c4 * N
    q_dot = (ic.c5 * p - ic.c7 * h) * r - ic.c6 * (p * p - r * r) + ic.c7 * M
    r_dot = (ic.c8 * p - ic.c2 * r + ic.c9 * h) * q + ic.c4 * L + ic.c9 * N
    return p_dot, q_dot, r_dot


def rate_dynamics(p, q, r, alpha, beta, V_t, qbar, da, de, dr,
                  cfg: AeroConfig, scale=None, ic: InertiaCoefficients | None = None):
    """Angular accelerations of the rotational prediction model (rad/s^2)."""
    ic = ic or inertia_coefficients(cfg)
    _, _, _, Cl, Cm, Cn = coefficients(alpha, beta, V_t, p, q, r, da, de, dr, cfg, scale)
    return rotational_acceleration(p, q, r, qbar, Cl, Cm, Cn, cfg, ic)


def state_derivative_6dof(x, u, wind=None, cfg: AeroConfig = AeroConfig(), scale=None,
                          power_factor=1.0, ic: InertiaCoefficients | None = None,
                          check: bool = True):
    """Time derivative of the 12-state plant.

    ``x`` is ``(..., 12)`` in ``STATE_NAMES`` order, ``u`` is
    ``(..., 4)`` as ``[delta_th, delta_a, delta_e, delta_r]`` and ``wind`` the
    NED air-mass velocity ``(..., 3)``.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    ic = ic or inertia_coefficients(cfg)
    if check and np.any(np.abs(x[..., 7]) >= np.pi / 2 - THETA_GUARD):
        raise ValueError("pitch attitude at the Euler-angle singularity")
    V_n = x[..., 3:6]
    if wind is not None:
        V_n = V_n - np.asarray(wind, dtype=float)
    phi, theta, psi = x[..., 6], x[..., 7], x[..., 8]
    p, q, r = x[..., 9], x[..., 10], x[..., 11]
    C = dcm_body_from_ned(phi, theta, psi)
    V_b = np.einsum("...ij,...j->...i", C, V_n)
    V_t, alpha, beta = air_data(V_b)
    if check and np.any(V_t <= 0):
        raise ValueError("true airspeed must be positive")
    height = -x[..., 2]
    qbar = 0.5 * air_density(height) * V_t * V_t
    CX, CY, CZ, Cl, Cm, Cn = coefficients(alpha, beta, V_t, p, q, r,
                                          u[..., 1], u[..., 2], u[..., 3], cfg, scale)
    T = thrust(u[..., 0], np.maximum(height, 0.0), V_t, power_factor)
    qS = qbar * cfg.S
    F_b = np.stack([qS * CX + T, qS * CY, qS * CZ], axis=-1) / cfg.mass
    acc = np.einsum("...ji,...j->...i", C, F_b)
    acc[..., 2] += G0

    sf, cf = np.sin(phi), np.cos(phi)
    tt, ct = np.tan(theta), np.cos(theta)
    phi_dot = p + (q * sf + r * cf) * tt
    theta_dot = q * cf - r * sf
    psi_dot = (q * sf + r * cf) / ct
    p_dot, q_dot, r_dot = rotational_acceleration(p, q, r, qbar, Cl, Cm, Cn, cfg, ic)
    return np.concatenate([
        x[..., 3:6], acc,
        np.stack([phi_dot, theta_dot, psi_dot, p_dot, q_dot, r_dot], axis=-1),
    ], axis=-1)


def longitudinal_accelerations(x_D, vN, vD, theta, q, delta_e, T, wind=None,
                               cfg: AeroConfig = AeroConfig(), scale=None,
                               ic: InertiaCoefficients | None = None):
    """``(V_N_dot, V_D_dot, q_dot, V_t)`` for wings-level flight with thrust ``T`` in newtons.

    Shared by the plant, the NMPC prediction model and the thrust filter.
    """
    ic = ic or inertia_coefficients(cfg)
    if wind is not None:
        w = np.asarray(wind, dtype=float)
        vN = vN - w[..., 0]
        vD = vD - w[..., 1]
    ct, st = np.cos(theta), np.sin(theta)
    ub = ct * vN - st * vD
    wb = st * vN + ct * vD
    V_t = np.sqrt(ub * ub + wb * wb)
    alpha = RAD2DEG * np.arctan2(wb, ub)
    qbar = 0.5 * air_density(-x_D) * V_t * V_t
    zero = np.zeros_like(V_t)
    CX, _, CZ, _, Cm, _ = coefficients(alpha, zero, V_t, zero, q, zero,
                                       zero, delta_e, zero, cfg, scale)
    qS = qbar * cfg.S
    Fx = (qS * CX + T) / cfg.mass
    Fz = qS * CZ / cfg.mass
    VN_dot = ct * Fx + st * Fz
    VD_dot = -st * Fx + ct * Fz + G0
    q_dot = ic.c7 * qS * cfg.c_bar * Cm
    return VN_dot, VD_dot, q_dot, V_t


def state_derivative_longitudinal(x, u, wind=None, cfg: AeroConfig = AeroConfig(),
                                  scale=None, power_factor=1.0,
                                  ic: InertiaCoefficients | None = None, check: bool = True):
    """Time derivative of the 5-state plant ``[x_D, V_N, V_D, theta, q]``.

    ``u`` is ``[delta_th, delta_e]``; ``wind`` is ``[w_N, w_D]``. This is the
    6DoF model with wings level, zero heading, and no lateral motion.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    x_D, vN, vD, theta, q = (x[..., i] for i in range(5))
    if check and np.any(np.abs(theta) >= np.pi / 2 - THETA_GUARD):
        raise ValueError("pitch attitude at the Euler-angle singularity")
    if wind is not None:
        w = np.asarray(wind, dtype=float)
        aN, aD = vN - w[..., 0], vD - w[..., 1]
    else:
        aN, aD = vN, vD
    V_t = np.hypot(aN, aD)
    if check and np.any(V_t <= 0):
        raise ValueError("true airspeed must be positive")
    height = -x_D
    T = thrust(u[..., 0], np.maximum(height, 0.0), V_t, power_factor)
    VN_dot, VD_dot, q_dot, _ = longitudinal_accelerations(x_D, vN, vD, theta, q, u[..., 1], T,
                                                          wind, cfg, scale, ic)
    return np.stack([vD, VN_dot, VD_dot, q, q_dot], axis=-1)


def embed_longitudinal(x_long, u_long=None):
    """Lift a longitudinal state (and control) into the 6DoF layout."""
    x_long = np.asarray(x_long, dtype=float)
    x = np.zeros(x_long.shape[:-1] + (12,))
    x[..., 2] = x_long[..., 0]
    x[..., 3] = x_long[..., 1]
    x[..., 5] = x_long[..., 2]
    x[..., 7] = x_long[..., 3]
    x[..., 10] = x_long[..., 4]
    if u_long is None:
        return x
    u_long = np.asarray(u_long, dtype=float)
    u = np.zeros(u_long.shape[:-1] + (4,))
    u[..., 0] = u_long[..., 0]
    u[..., 2] = u_long[..., 1]
    return x, u


def rk4_step(f, x, dt, *args, **kwargs):
    """One classical Runge-Kutta step of ``x' = f(x, *args)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k1 = f(x, *args, **kwargs)
    k2 = f(x + 0.5 * dt * k1, *args, **kwargs)
    k3 = f(x + 0.5 * dt * k2, *args, **kwargs)
    k4 = f(x + dt * k3, *args, **kwargs)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_step(x, u, wind, dt, plant: str = "6dof", **kwargs):
    """Advance the selected plant by ``dt`` with a fixed RK4 step."""
    if plant == "6dof":
        f = state_derivative_6dof
    elif plant == "longitudinal":
        f = state_derivative_longitudinal
    else:
        raise ValueError(f"unknown plant {plant!r}")
    return rk4_step(f, np.asarray(x, dtype=float), dt, u, wind, **kwargs)


@dataclass(frozen=True)
class LongitudinalTrim:
    theta: float
    delta_e: float
    delta_th: float
    thrust: float
    alpha: float

    def state(self, V_t: float, height: float, gamma: float = 0.0) -> np.ndarray:
        return np.array([-height, V_t * np.cos(gamma), -V_t * np.sin(gamma), self.theta, 0.0])


def trim_longitudinal(V_t: float, height: float, gamma: float = 0.0,
                      cfg: AeroConfig = AeroConfig(), wind=(0.0, 0.0)) -> LongitudinalTrim:
    """Steady straight flight at airspeed ``V_t`` and flight-path angle ``gamma`` (rad)."""
    from scipy.optimize import fsolve

    wind = np.asarray(wind, dtype=float)
    vN = V_t * np.cos(gamma) + wind[0]
    vD = -V_t * np.sin(gamma) + wind[1]

    def resid(z):
        theta, de, dth = z
        xdot = state_derivative_longitudinal(np.array([-height, vN, vD, theta, 0.0]),
                                             np.array([dth, de]), wind, cfg, check=False)
        return [xdot[1], xdot[2], xdot[4] * 10.0]

    sol, info, ier, msg = fsolve(resid, [gamma + 0.05, 0.0, 0.3], full_output=True, xtol=1e-13)
    if ier != 1:
        raise RuntimeError(f"trim failed: {msg}")
    theta, de, dth = sol
    return LongitudinalTrim(theta=float(theta), delta_e=float(de), delta_th=float(dth),
                            thrust=float(thrust(dth, height, V_t)),
                            alpha=float(RAD2DEG * (theta - gamma)))
