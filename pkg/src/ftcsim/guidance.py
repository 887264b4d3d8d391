"""Outer loops: waypoint guidance, speed and attitude PID loops, reference profiles."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import aircraft as ac

DEG = np.pi / 180.0


# --------------------------------------------------------------------------
# reference profiles


@dataclass
class LongitudinalReference:
    """Piecewise-linear height profile with constant airspeed demand.

    ``knots`` are ``(time, height)`` pairs; height is held outside the knots.
    """

    knots: tuple = ((0.0, 100.0), (25.0, 150.0), (85.0, 150.0), (135.0, 50.0))
    V_T_ref: float = 50.0

    def __post_init__(self):
        t = np.array([k[0] for k in self.knots], dtype=float)
        if len(t) < 1 or np.any(np.diff(t) <= 0):
            raise ValueError("reference knots must have strictly increasing times")
        self._t = t
        self._h = np.array([k[1] for k in self.knots], dtype=float)

    def height(self, t):
        return np.interp(t, self._t, self._h)

    def climb_rate(self, t):
        """d(height)/dt on the piece containing ``t`` (zero outside the knots)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        slopes = np.diff(self._h) / np.diff(self._t)
        idx = np.searchsorted(self._t, t, side="right") - 1
        inside = (idx >= 0) & (idx < len(slopes))
        out = np.zeros_like(t)
        out[inside] = slopes[idx[inside]]
        return out

    def x_D(self, t):
        return -self.height(t)

    def V_D(self, t):
        return -self.climb_rate(t)

    @property
    def duration(self) -> float:
        return float(self._t[-1])


@dataclass(frozen=True)
class RollProfile:
    """Piecewise-constant bank-angle doublets (deg), ``segment`` seconds each."""

    levels: tuple = (20.0, 0.0, -20.0, 0.0)  # flown from wings-level trim
    segment: float = 10.0
    limit: float = 30.0

    def __post_init__(self):
        if self.segment <= 0:
            raise ValueError("segment length must be positive")
        if any(abs(v) > self.limit for v in self.levels):
            raise ValueError(f"roll demands must stay within +/-{self.limit} deg")

    @property
    def duration(self) -> float:
        return self.segment * len(self.levels)


def roll_demand_profile(t: float, profile: RollProfile = RollProfile()) -> float:
    """Bank-angle demand in degrees; the last level holds after the sequence ends."""
    if t < 0:
        raise ValueError("time must be non-negative")
    k = min(int(t // profile.segment), len(profile.levels) - 1)
    return float(profile.levels[k])


# --------------------------------------------------------------------------
# waypoint guidance


@dataclass(frozen=True)
class WaypointPath:
    waypoints: tuple
    radius: float = 150.0

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 3 or wp.shape[0] < 2:
            raise ValueError("need at least two NED waypoints")
        if np.any(np.linalg.norm(np.diff(wp, axis=0), axis=1) == 0):
            raise ValueError("consecutive waypoints must be distinct")
        if self.radius <= 0:
            raise ValueError("acceptance radius must be positive")
        object.__setattr__(self, "waypoints", tuple(map(tuple, wp)))

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.waypoints)


@dataclass(frozen=True)
class GuidanceConfig:
    """Lookahead-style lateral law with coordinated-turn rate mapping."""

    lookahead: float = 300.0
    k_phi: float = 1.0  # 1/s, bank error to roll rate
    k_gamma: float = 1.0  # 1/s, flight-path error to pitch rate
    max_bank: float = 30.0  # deg
    max_gamma: float = 6.0  # deg
    rate_limit: float = 30.0  # deg/s


@dataclass(frozen=True)
class GuidanceOutput:
    demands: np.ndarray  # p, q, r in rad/s
    index: int  # active leg: from waypoint index-1 to index
    done: bool
    bank_demand: float = 0.0  # deg


def guidance_step(x, path: WaypointPath, index: int = 1,
                  cfg: GuidanceConfig = GuidanceConfig()) -> GuidanceOutput:
    """Rate demands steering the 6DoF state ``x`` along the active leg.

    The lateral acceleration ``2 V^2 sin(eta) / L`` toward a point ``L`` ahead
    on the leg sets the bank demand; roll rate closes the bank error, yaw rate
    is the coordinated-turn rate, and pitch rate closes the flight-path error.
    """
    x = np.asarray(x, dtype=float)
    pts = path.points
    zero = GuidanceOutput(np.zeros(3), index, True)
    if index >= len(pts):
        return zero
    pos = x[0:3]
    while index < len(pts) and np.linalg.norm((pts[index] - pos)[:2]) < path.radius:
        index += 1
    if index >= len(pts):
        return zero
    a, b = pts[index - 1], pts[index]

    v = x[3:6]
    V_h = max(np.hypot(v[0], v[1]), 1.0)
    V = max(np.linalg.norm(v), 1.0)
    leg = (b - a)[:2]
    leg_len = np.linalg.norm(leg)
    e = leg / leg_len
    along = float(np.dot(pos[:2] - a[:2], e))
    target = a[:2] + e * min(max(along, 0.0) + cfg.lookahead, leg_len)
    los = target - pos[:2]
    if np.linalg.norm(los) < 1e-9:
        los = e
    # signed angle from velocity to line of sight, positive to the right
    eta = np.arctan2(v[0] * los[1] - v[1] * los[0], v[0] * los[0] + v[1] * los[1])
    a_lat = 2.0 * V_h * V_h / cfg.lookahead * np.sin(eta)
    phi_dem = np.clip(np.arctan2(a_lat, ac.G0), -cfg.max_bank * DEG, cfg.max_bank * DEG)

    phi, theta = x[6], x[7]
    p_dem = cfg.k_phi * (phi_dem - phi)
    r_dem = ac.G0 / V * np.sin(phi) * np.cos(theta)

    dist = max(np.linalg.norm((b - pos)[:2]), 1.0)
    gamma_dem = np.clip(np.arctan2(-(b[2] - pos[2]), dist), -cfg.max_gamma * DEG,
                        cfg.max_gamma * DEG)
    gamma = np.arctan2(-v[2], V_h)
    q_dem = cfg.k_gamma * (gamma_dem - gamma) * np.cos(phi)

    lim = cfg.rate_limit * DEG
    demands = np.clip(np.array([p_dem, q_dem, r_dem]), -lim, lim)
    return GuidanceOutput(demands, index, False, float(phi_dem / DEG))


# --------------------------------------------------------------------------
# PID loops


@dataclass(frozen=True)
class PiGains:
    kp: float
    ki: float
    trim: float = 0.0
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("PI output limits must satisfy lower <= upper")


SPEED_GAINS = PiGains(kp=0.03, ki=0.01, trim=0.3224)


def pi_speed_loop(V_T: float, V_T_dem: float, integral: float, dt: float,
                  gains: PiGains = SPEED_GAINS) -> tuple[float, float]:
    """Throttle from airspeed error; returns ``(delta_th, new_integral)``.

    The integrator is frozen whenever the output is saturated and the error
    would push it further into saturation.
    """
    e = V_T_dem - V_T
    raw = gains.trim + gains.kp * e + gains.ki * integral
    out = min(max(raw, gains.lower), gains.upper)
    saturated_high = raw >= gains.upper and e > 0
    saturated_low = raw <= gains.lower and e < 0
    if not (saturated_high or saturated_low):
        integral = integral + e * dt
    return float(out), float(integral)


@dataclass(frozen=True)
class AttitudeGains:
    """Gains in degree units: surface deg per deg (or deg/s) of error."""

    k_phi: float = 1.5
    k_p: float = 0.5
    k_theta: float = 2.0
    k_theta_i: float = 0.5
    k_q: float = 1.0
    k_beta: float = 1.0
    k_r: float = 2.0
    k_h: float = 0.01  # rad of pitch demand per m of height error
    surface_limit: float = 20.0


@dataclass
class AttitudeHarnessState:
    theta_integral: float = 0.0
    speed_integral: float = 0.0


@dataclass(frozen=True)
class TrimPoint:
    theta: float  # rad
    delta_e: float  # deg
    delta_th: float
    height: float = 100.0
    V_t: float = 50.0


def pid_attitude_harness(phi_dem: float, x, trim: TrimPoint, state: AttitudeHarnessState,
                         dt: float, wind=None, gains: AttitudeGains = AttitudeGains(),
                         speed_gains: PiGains | None = None):
    """Classical loops for flying bank-angle demands on the 6DoF plant.

    Bank angle drives the aileron, pitch attitude (with a slow height
    correction) the elevator, sideslip and turn-rate error the rudder, and
    airspeed the throttle. ``phi_dem`` is in degrees. Returns
    ``(u, new_state)`` with ``u = [delta_th, delta_a, delta_e, delta_r]``.
    """
    x = np.asarray(x, dtype=float)
    V_n = x[3:6] - (0.0 if wind is None else np.asarray(wind, dtype=float))
    C = ac.dcm_body_from_ned(x[6], x[7], x[8])
    V_t, _, beta = ac.air_data(C @ V_n)
    phi, theta = x[6] / DEG, x[7] / DEG
    p, q, r = x[9:12] / DEG
    g = gains

    da = -g.k_phi * (phi_dem - phi) + g.k_p * p

    height = -x[2]
    theta_dem = trim.theta / DEG + g.k_h * (trim.height - height) / DEG
    e_theta = theta_dem - theta
    de = trim.delta_e - g.k_theta * e_theta - g.k_theta_i * state.theta_integral + g.k_q * q

    r_turn = ac.G0 / max(V_t, 1.0) * np.sin(x[6]) / DEG
    dr = -g.k_beta * beta + g.k_r * (r - r_turn)

    lim = g.surface_limit
    surfaces = np.clip([da, de, dr], -lim, lim)
    theta_integral = state.theta_integral
    if abs(de) < lim:
        theta_integral += e_theta * dt
    sg = speed_gains or replace(SPEED_GAINS, trim=trim.delta_th)
    dth, speed_integral = pi_speed_loop(float(V_t), trim.V_t, state.speed_integral, dt, sg)
    u = np.array([dth, surfaces[0], surfaces[1], surfaces[2]])
    return u, AttitudeHarnessState(theta_integral, speed_integral)


@dataclass(frozen=True)
class HeightHoldGains:
    """Longitudinal PID: height error to climb rate to pitch attitude to elevator."""

    k_h: float = 0.3  # 1/s, height error to climb-rate correction
    k_gamma: float = 1.5  # pitch deg per deg of flight-path error
    k_theta: float = 2.0
    k_theta_i: float = 0.3
    k_q: float = 1.0
    max_climb: float = 3.0
    elevator_limit: float = 20.0


@dataclass
class HeightHoldState:
    theta_integral: float = 0.0
    speed_integral: float = 0.0


def pid_longitudinal(t: float, x_long, ref: LongitudinalReference, trim: TrimPoint,
                     state: HeightHoldState, dt: float, wind=(0.0, 0.0),
                     gains: HeightHoldGains = HeightHoldGains(),
                     speed_gains: PiGains | None = None):
    """Simple PID height/airspeed loops on the longitudinal plant.

    Returns ``([delta_th, delta_e], new_state)``.
    """
    x_D, vN, vD, theta, q = np.asarray(x_long, dtype=float)
    g = gains
    height = -x_D
    wN, wD = wind
    V_t = float(np.hypot(vN - wN, vD - wD))
    climb_dem = float(ref.climb_rate(t)[0]) + g.k_h * (float(ref.height(t)) - height)
    climb_dem = float(np.clip(climb_dem, -g.max_climb, g.max_climb))
    gamma_dem = np.arcsin(np.clip(climb_dem / max(V_t, 1.0), -1.0, 1.0))
    gamma = np.arcsin(np.clip(-vD / max(np.hypot(vN, vD), 1.0), -1.0, 1.0))
    alpha_trim = trim.theta  # level-flight angle of attack (rad)
    theta_dem = (alpha_trim + gamma_dem + g.k_gamma * (gamma_dem - gamma)) / DEG
    e_theta = theta_dem - theta / DEG
    de = trim.delta_e - g.k_theta * e_theta - g.k_theta_i * state.theta_integral + g.k_q * q / DEG
    lim = g.elevator_limit
    theta_integral = state.theta_integral
    if abs(de) < lim:
        theta_integral += e_theta * dt
    sg = speed_gains or replace(SPEED_GAINS, trim=trim.delta_th)
    dth, speed_integral = pi_speed_loop(V_t, ref.V_T_ref, state.speed_integral, dt, sg)
    return np.array([dth, float(np.clip(de, -lim, lim))]), HeightHoldState(theta_integral,
                                                                           speed_integral)
