"""Steady wind, Dryden turbulence, and measurement noise."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

FT = 0.3048
MIN_HEIGHT_FT = 10.0


@dataclass(frozen=True)
class TurbulenceConfig:
    """MIL-spec low-altitude Dryden parameters.

    ``sigma_w`` is the vertical gust intensity (m/s); the horizontal
    intensities and all scale lengths follow from height.
    """

    sigma_w: float = 0.7
    enabled: bool = True

    def __post_init__(self):
        if self.sigma_w < 0:
            raise ValueError("turbulence intensity must be non-negative")


@dataclass
class WindState:
    steady: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gust: np.ndarray = field(default_factory=lambda: np.zeros(3))  # body axes u_g, v_g, w_g
    x_u: np.ndarray = field(default_factory=lambda: np.zeros(1))
    x_v: np.ndarray = field(default_factory=lambda: np.zeros(2))
    x_w: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def ned(self, C_bn: np.ndarray | None = None) -> np.ndarray:
        """Total wind in NED; ``C_bn`` rotates NED to body (gusts are body-axis)."""
        if C_bn is None:
            return self.steady + self.gust
        return self.steady + C_bn.T @ self.gust

    def copy(self) -> "WindState":
        return WindState(self.steady.copy(), self.gust.copy(), self.x_u.copy(),
                         self.x_v.copy(), self.x_w.copy())


def dryden_parameters(altitude: float, sigma_w: float):
    """Low-altitude intensities ``(s_u, s_v, s_w)`` and scale lengths ``(L_u, L_v, L_w)`` in SI."""
    h_ft = max(float(altitude) / FT, MIN_HEIGHT_FT)
    k = 0.177 + 0.000823 * h_ft
    s_uv = sigma_w / k**0.4
    L_uv = h_ft / k**1.2 * FT
    L_w = h_ft * FT
    return (s_uv, s_uv, sigma_w), (L_uv, L_uv, L_w)


def _first_order(T: float):
    return np.array([[-1.0 / T]]), np.array([[1.0]]), np.array([[1.0]])


def _second_order(T: float):
    # (1 + sqrt(3) T s) / (1 + T s)^2 in controllable canonical form
    A = np.array([[0.0, 1.0], [-1.0 / T**2, -2.0 / T]])
    B = np.array([[0.0], [1.0]])
    C = np.array([[1.0 / T**2, np.sqrt(3.0) / T]])
    return A, B, C


@lru_cache(maxsize=65536)
def _discretize(order: int, T: float, dt: float):
    """Exact zero-order discretization and unit-variance output gain.

    Returns ``(F, sqrt(Qd), c_unit)`` where the output row ``c_unit`` scales the output to a
    stationary variance of one.
    """
    A, B, C = _first_order(T) if order == 1 else _second_order(T)
    n = A.shape[0]
    M = np.zeros((2 * n, 2 * n))
    M[:n, :n] = -A
    M[:n, n:] = B @ B.T
    M[n:, n:] = A.T
    E = expm(M * dt)
    F = E[n:, n:].T
    Qd = F @ E[:n, n:]
    Qd = 0.5 * (Qd + Qd.T)
    P = solve_continuous_lyapunov(A, -B @ B.T)
    var = (C @ P @ C.T).item()
    w, V = np.linalg.eigh(Qd)
    L = V * np.sqrt(np.clip(w, 0.0, None))
    return F, L, C[0] / np.sqrt(var)


def _quantize(x: float) -> float:
    # cache key resolution (1e-4 relative on time constants); keeps expm calls
    # bounded while airspeed and height wander
    return float(f"{x:.4g}")


def dryden_step(ws: WindState, airspeed: float, altitude: float, dt: float,
                intensity: float, rng: np.random.Generator) -> WindState:
    """Advance the three shaping filters by ``dt`` and refresh ``ws.gust``.

    Five standard normal draws are consumed per call regardless of
    intensity, so enabling turbulence does not shift other random streams.
    """
    if dt <= 0 or airspeed <= 0:
        raise ValueError("dt and airspeed must be positive")
    eta = rng.standard_normal(5)
    out = ws.copy()
    if intensity == 0.0:
        out.gust = np.zeros(3)
        out.x_u[:] = 0.0
        out.x_v[:] = 0.0
        out.x_w[:] = 0.0
        return out
    sig, L = dryden_parameters(altitude, intensity)
    V = float(airspeed)
    Fu, Lu, Cu = _discretize(1, _quantize(L[0] / V), _quantize(dt))
    Fv, Lv, Cv = _discretize(2, _quantize(L[1] / V), _quantize(dt))
    Fw, Lw, Cw = _discretize(2, _quantize(L[2] / V), _quantize(dt))
    out.x_u = Fu @ ws.x_u + Lu @ eta[0:1]
    out.x_v = Fv @ ws.x_v + Lv @ eta[1:3]
    out.x_w = Fw @ ws.x_w + Lw @ eta[3:5]
    out.gust = np.array([
        sig[0] * float(Cu @ out.x_u),
        sig[1] * float(Cv @ out.x_v),
        sig[2] * float(Cw @ out.x_w),
    ])
    return out


@dataclass(frozen=True)
class NoiseSpec:
    """Measurement noise for ``[V_EAS, v_D, theta]``."""

    sigma_VEAS: float = 0.05
    sigma_vD: float = 0.05
    sigma_theta: float = 0.017
    seed: int = 0

    def __post_init__(self):
        if min(self.sigma_VEAS, self.sigma_vD, self.sigma_theta) < 0:
            raise ValueError("noise standard deviations must be non-negative")

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([self.sigma_VEAS, self.sigma_vD, self.sigma_theta])

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def scaled(self, factor: float) -> "NoiseSpec":
        return replace(self, sigma_VEAS=self.sigma_VEAS * factor,
                       sigma_vD=self.sigma_vD * factor,
                       sigma_theta=self.sigma_theta * factor)


def apply_sensor_noise(truth, spec, rng: np.random.Generator) -> np.ndarray:
    """Add independent zero-mean Gaussian noise per channel.

    ``spec`` is a ``NoiseSpec`` or any array of per-channel sigmas.
    """
    truth = np.asarray(truth, dtype=float)
    sig = spec.sigmas if isinstance(spec, NoiseSpec) else np.asarray(spec, dtype=float)
    if np.any(sig < 0):
        raise ValueError("noise standard deviations must be non-negative")
    return truth + sig * rng.standard_normal(truth.shape)
