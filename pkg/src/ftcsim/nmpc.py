"""Pseudospectral NMPC: collocation transcription and receding-horizon controllers.

Two problems are provided:

* the angular-rate tracking problem on ``[p, q, r, I_p, I_q, I_r, de, da, dr]``
  with surface rates as inputs, driven by guidance demands;
* the longitudinal problem on ``[x_D, V_N, V_D, theta, q, T, de]`` with thrust
  and elevator rates as inputs, tracking a height/airspeed profile under a
  thrust ceiling that the FDI filter can lower.

Both are transcribed on an LGL grid spanning the prediction horizon; states
are pinned to the measurement at the first node and every node carries a
collocation defect. Decision variables and defects are scaled to O(1).
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import aircraft as ac
from .collocation import CollocationGrid, lgl_grid
from .guidance import LongitudinalReference
from .sqp import CONVERGED, INFEASIBLE, SqpOptions, SqpResult, solve_nlp

log = logging.getLogger(__name__)

FD_STEP = 1e-6


# --------------------------------------------------------------------------
# generic transcription


class OcpProblem:
    """Collocation NLP over ``N+1`` nodes of ``[x, u]``.

    ``node_model(X, U)`` maps physical node states/inputs ``(..., n_x)``,
    ``(..., n_u)`` to ``(xdot, y)``: the state derivative and the cost
    outputs. The cost is ``(H/2) sum_j w_j sum_k Q_k (y_jk - y_ref_jk)^2``.
    """

    def __init__(self, grid: CollocationGrid, horizon: float, n_x: int, n_u: int,
                 node_model: Callable, x0, y_ref, weights, x_scale, u_scale,
                 x_lb, x_ub, u_lb, u_ub, names=None, u0=None):
        self.grid = grid
        self.horizon = float(horizon)
        self.n_x, self.n_u = n_x, n_u
        self.nv = n_x + n_u
        self.n_nodes = grid.size
        self.node_model = node_model
        self.x0 = np.asarray(x0, dtype=float)
        self.u0 = np.zeros(n_u) if u0 is None else np.asarray(u0, dtype=float)
        self.y_ref = np.asarray(y_ref, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.scale = np.concatenate([x_scale, u_scale]).astype(float)
        self.names = names
        lb = np.concatenate([x_lb, u_lb]).astype(float)
        ub = np.concatenate([x_ub, u_ub]).astype(float)
        self.node_lb = lb
        self.node_ub = ub
        lb_all = np.tile(lb / self.scale, (self.n_nodes, 1))
        ub_all = np.tile(ub / self.scale, (self.n_nodes, 1))
        # the measured state is imposed through the bounds of node 0, which
        # the QP eliminates; x0 must lie in the state box
        if np.any(self.x0 < lb[:n_x]) or np.any(self.x0 > ub[:n_x]):
            raise ValueError("initial state outside the state bounds")
        lb_all[0, :n_x] = ub_all[0, :n_x] = self.x0 / self.scale[:n_x]
        self.lb = lb_all.ravel()
        self.ub = ub_all.ravel()
        self.n = self.lb.size
        # sqrt of the per-node, per-output quadrature weight
        self._sw = np.sqrt(0.5 * self.horizon * np.outer(grid.weights, self.weights))
        self.n_defects = self.n_nodes * n_x
        self.m = self.n_defects
        self._A_const = self._constant_jacobian()

    # layout helpers
    def unpack(self, z):
        Z = np.asarray(z).reshape(self.n_nodes, self.nv) * self.scale
        return Z[:, :self.n_x], Z[:, self.n_x:]

    def pack(self, X, U):
        return (np.concatenate([X, U], axis=1) / self.scale).ravel()

    def initial_guess(self):
        """Constant-state, constant-input guess at the pinned state."""
        X = np.tile(self.x0, (self.n_nodes, 1))
        U = np.tile(self.u0, (self.n_nodes, 1))
        return np.clip(self.pack(X, U), self.lb, self.ub)

    def _constant_jacobian(self):
        nx, nv, nn = self.n_x, self.nv, self.n_nodes
        xs = self.scale[:nx]
        A = np.zeros((self.m, self.n))
        D = self.grid.D
        for k in range(nx):
            rows = np.arange(nn) * nx + k
            cols = np.arange(nn) * nv + k
            A[np.ix_(rows, cols)] = D  # X_lk = Z_lk * xs_k, defect divided by xs_k
        return A

    # evaluation
    def _defects(self, X, U, xdot):
        xs = self.scale[:self.n_x]
        dfc = (self.grid.D @ X - 0.5 * self.horizon * xdot) / xs
        return dfc.ravel()

    def objective(self, z) -> float:
        X, U = self.unpack(z)
        _, y = self.node_model(X, U)
        rho = self._sw * (y - self.y_ref)
        return float(np.sum(rho * rho))

    def constraints(self, z):
        X, U = self.unpack(z)
        xdot, _ = self.node_model(X, U)
        return self._defects(X, U, xdot)

    def _node_jacobians(self, X, U):
        """Central-difference Jacobians of xdot and y w.r.t. scaled node variables."""
        nv, nx = self.nv, self.n_x
        V = np.concatenate([X, U], axis=1)
        h = FD_STEP * self.scale
        pert = np.zeros((2 * nv, 1, nv))
        idx = np.arange(nv)
        pert[idx, 0, idx] = h
        pert[nv + idx, 0, idx] = -h
        Vp = V[None] + pert
        xd, y = self.node_model(Vp[..., :nx], Vp[..., nx:])
        # d/dz_i = scale_i * d/dv_i
        Jx = (xd[:nv] - xd[nv:]) / (2 * FD_STEP)
        Jy = (y[:nv] - y[nv:]) / (2 * FD_STEP)
        # -> (nodes, outputs, inputs)
        return np.transpose(Jx, (1, 2, 0)), np.transpose(Jy, (1, 2, 0))

    def linearize(self, z):
        X, U = self.unpack(z)
        xdot, y = self.node_model(X, U)
        Jx, Jy = self._node_jacobians(X, U)
        nx, nv, nn = self.n_x, self.nv, self.n_nodes
        xs = self.scale[:nx]

        rho = self._sw * (y - self.y_ref)
        Jr = self._sw[:, :, None] * Jy  # (nodes, outputs, nv)
        f = float(np.sum(rho * rho))
        grad = 2.0 * np.einsum("jo,jov->jv", rho, Jr).ravel()
        H = np.zeros((self.n, self.n))
        blocks = 2.0 * np.einsum("jov,jow->jvw", Jr, Jr)
        for j in range(nn):
            sl = slice(j * nv, (j + 1) * nv)
            H[sl, sl] = blocks[j]

        c = self._defects(X, U, xdot)
        A = self._A_const.copy()
        Jd = -0.5 * self.horizon * Jx / xs[None, :, None]
        for j in range(nn):
            A[j * nx:(j + 1) * nx, j * nv:(j + 1) * nv] += Jd[j]
        return f, grad, H, c, A

    def bound_violation(self, z) -> float:
        z = np.asarray(z)
        return float(max(np.max(self.lb - z, initial=0.0), np.max(z - self.ub, initial=0.0), 0.0))

    def shifted_guess(self, solution: "OcpSolution", dt: float):
        """Previous trajectory advanced by ``dt`` (held at the horizon end), re-pinned."""
        tau = self.grid.nodes + 2.0 * dt / solution.horizon
        tau = np.minimum(tau, 1.0)
        X = self.grid.interpolate(solution.states, tau) if solution.grid is self.grid else \
            solution.grid.interpolate(solution.states, tau)
        U = solution.grid.interpolate(solution.controls, tau)
        X[0] = self.x0
        return np.clip(self.pack(X, U), self.lb, self.ub)


@dataclass
class OcpSolution:
    states: np.ndarray
    controls: np.ndarray
    times: np.ndarray
    horizon: float
    grid: CollocationGrid
    status: str
    iterations: int
    kkt: float
    defect: float
    bound_violation: float
    objective: float
    z: np.ndarray = field(repr=False, default=None)
    multipliers: np.ndarray = field(repr=False, default=None)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def state_at(self, t: float) -> np.ndarray:
        tau = 2.0 * t / self.horizon - 1.0
        return self.grid.interpolate(self.states, tau)[0]

    def control_at(self, t: float) -> np.ndarray:
        tau = 2.0 * t / self.horizon - 1.0
        return self.grid.interpolate(self.controls, tau)[0]


def solve(ocp: OcpProblem, warm: OcpSolution | None = None, shift: float = 0.0,
          options: SqpOptions | None = None, z0=None) -> OcpSolution:
    """Solve the transcribed problem, warm-starting from a previous solution."""
    lam0 = None
    if z0 is None:
        if warm is not None and warm.z is not None and warm.z.size == ocp.n:
            z0 = ocp.shifted_guess(warm, shift) if shift > 0 else warm.z
            lam0 = warm.multipliers
        else:
            z0 = ocp.initial_guess()
    res: SqpResult = solve_nlp(ocp, z0, lam0, options)
    X, U = ocp.unpack(res.z)
    return OcpSolution(
        states=X, controls=U, times=ocp.grid.times(0.0, ocp.horizon), horizon=ocp.horizon,
        grid=ocp.grid, status=res.status, iterations=res.iterations, kkt=res.kkt,
        defect=res.constraint_violation, bound_violation=ocp.bound_violation(res.z),
        objective=res.objective, z=res.z, multipliers=res.multipliers,
    )


# --------------------------------------------------------------------------
# angular-rate tracking problem

RATE_STATE_NAMES = ("p", "q", "r", "I_p", "I_q", "I_r", "delta_e", "delta_a", "delta_r")
RATE_INPUT_NAMES = ("d_delta_e", "d_delta_a", "d_delta_r")


@dataclass(frozen=True)
class RateOcpConfig:
    horizon: float = 1.0
    n_points: int = 16
    Q_omega: float = 1.0
    Q_I: float = 1e-6
    Q_u: float = 0.05
    Q_a: float = 1.0
    surface_limit: float = 20.0  # deg
    rate_limit: float = 200.0  # deg/s
    v_stall: float = 30.0
    tol: float = 1e-6
    max_iter: int = 50

    def __post_init__(self):
        if self.horizon <= 0 or self.n_points < 2:
            raise ValueError("horizon must be positive and the grid needs >= 2 points")
        if min(self.Q_omega, self.Q_I, self.Q_u, self.Q_a) < 0:
            raise ValueError("cost weights must be non-negative")
        if self.surface_limit <= 0 or self.rate_limit <= 0:
            raise ValueError("bounds must satisfy lower <= upper")


@dataclass(frozen=True)
class FlightCondition:
    """Quantities held fixed across the rate-problem horizon."""

    V_t: float
    alpha: float  # deg
    beta: float  # deg
    qbar: float
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    thrust: float = 0.0

    @classmethod
    def from_state(cls, x, wind=None, thrust: float = 0.0) -> "FlightCondition":
        x = np.asarray(x, dtype=float)
        V_n = x[3:6] - (0.0 if wind is None else np.asarray(wind))
        C = ac.dcm_body_from_ned(x[6], x[7], x[8])
        V_t, alpha, beta = ac.air_data(C @ V_n)
        qbar = 0.5 * ac.air_density(-x[2]) * V_t**2
        return cls(float(V_t), float(alpha), float(beta), float(qbar),
                   float(x[6]), float(x[7]), float(x[8]), float(thrust))


def rate_node_model(cond: FlightCondition, demands, cfg: ac.AeroConfig, scale):
    """Prediction model of the rate problem (rates deg/s, deflections deg)."""
    ic = ac.inertia_coefficients(cfg)
    dem = np.asarray(demands, dtype=float)
    C = ac.dcm_body_from_ned(cond.phi, cond.theta, cond.psi)
    s = None if scale is None else np.asarray(scale, dtype=float)

    def model(X, U):
        w = X[..., 0:3] / ac.RAD2DEG
        de, da, dr = X[..., 6], X[..., 7], X[..., 8]
        CX, CY, CZ, Cl, Cm, Cn = ac.coefficients(cond.alpha, cond.beta, cond.V_t,
                                                 w[..., 0], w[..., 1], w[..., 2],
                                                 da, de, dr, cfg, s)
        pd, qd, rd = ac.rotational_acceleration(w[..., 0], w[..., 1], w[..., 2], cond.qbar,
                                                Cl, Cm, Cn, cfg, ic)
        err = X[..., 0:3] - dem
        xdot = np.concatenate([
            np.stack([pd, qd, rd], axis=-1) * ac.RAD2DEG,
            err,
            U,
        ], axis=-1)
        qS = cond.qbar * cfg.S
        F = np.stack([qS * CX + cond.thrust, qS * CY, qS * CZ], axis=-1) / cfg.mass
        a_n = F @ C  # C^T F for row vectors
        a_n = a_n + np.array([0.0, 0.0, ac.G0])
        y = np.concatenate([err, err, U, a_n], axis=-1)
        return xdot, y

    return model


def build_rate_ocp(cfg: RateOcpConfig, x0, demands, cond: FlightCondition,
                   aero: ac.AeroConfig = ac.AeroConfig(), scale=None) -> OcpProblem:
    """Rate-tracking OCP.

    ``x0`` is the 12-vector ``[p, q, r, I_p, I_q, I_r, de, da, dr, d_de, d_da, d_dr]``
    in deg, deg/s and deg s; the trailing surface rates seed the input guess.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (12,):
        raise ValueError("rate OCP state must have 12 components")
    u0 = np.clip(x0[9:], -cfg.rate_limit, cfg.rate_limit)
    x0 = x0[:9]
    grid = lgl_grid(cfg.n_points - 1)
    lim, rl = cfg.surface_limit, cfg.rate_limit
    inf = np.inf
    x_lb = np.array([-inf] * 6 + [-lim] * 3)
    x_ub = np.array([inf] * 6 + [lim] * 3)
    u_lb = np.full(3, -rl)
    u_ub = np.full(3, rl)
    x0 = x0.copy()
    x0[6:] = np.clip(x0[6:], -lim, lim)
    weights = np.array([cfg.Q_omega] * 3 + [cfg.Q_I] * 3 + [cfg.Q_u] * 3 + [cfg.Q_a] * 3)
    y_ref = np.zeros((grid.size, 12))
    model = rate_node_model(cond, demands, aero, scale)
    return OcpProblem(grid, cfg.horizon, 9, 3, model, x0, y_ref, weights,
                      x_scale=np.array([10.0] * 3 + [10.0] * 3 + [10.0] * 3),
                      u_scale=np.full(3, 50.0),
                      x_lb=x_lb, x_ub=x_ub, u_lb=u_lb, u_ub=u_ub,
                      names=RATE_STATE_NAMES + RATE_INPUT_NAMES, u0=u0)


# --------------------------------------------------------------------------
# longitudinal problem

LONG_OCP_STATE_NAMES = ("x_D", "V_N", "V_D", "theta", "q", "thrust", "delta_e")
LONG_OCP_INPUT_NAMES = ("d_thrust", "d_delta_e")


@dataclass(frozen=True)
class LongitudinalOcpConfig:
    horizon: float = 5.0
    n_points: int = 16
    Q_x: float = 10.0
    Q_VT: float = 5.0
    Q_VD: float = 5.0
    Q_T: float = 0.001
    Q_de: float = 0.1
    Q_q: float = 0.01
    Q_a: float = 0.01
    height_min: float = 1.0
    height_max: float = 300.0
    V_N_min: float = 30.0
    V_N_max: float = 100.0
    V_D_max: float = 3.0
    elevator_limit: float = 20.0  # deg
    thrust_rate_limit: float = 6500.0  # N/s
    elevator_rate_limit: float = 200.0  # deg/s
    tol: float = 1e-6
    max_iter: int = 50

    def __post_init__(self):
        if self.horizon <= 0 or self.n_points < 2:
            raise ValueError("horizon must be positive and the grid needs >= 2 points")
        weights = (self.Q_x, self.Q_VT, self.Q_VD, self.Q_T, self.Q_de, self.Q_q, self.Q_a)
        if min(weights) < 0:
            raise ValueError("cost weights must be non-negative")
        if self.height_min > self.height_max or self.V_N_min > self.V_N_max:
            raise ValueError("bounds must satisfy lower <= upper")


def longitudinal_node_model(cfg: ac.AeroConfig, wind=(0.0, 0.0)):
    """Prediction model with thrust as a force state (N)."""
    ic = ac.inertia_coefficients(cfg)
    w = np.array([float(wind[0]), float(wind[1])])

    def model(X, U):
        x_D, vN, vD, theta, q, T, de = (X[..., i] for i in range(7))
        vN_dot, vD_dot, q_dot, V_t = ac.longitudinal_accelerations(x_D, vN, vD, theta, q, de, T,
                                                                   w, cfg, ic=ic)
        xdot = np.stack([vD, vN_dot, vD_dot, q, q_dot, U[..., 0], U[..., 1]], axis=-1)
        y = np.stack([x_D, V_t, vD, U[..., 0], U[..., 1], q * ac.RAD2DEG, vD_dot], axis=-1)
        return xdot, y

    return model


def build_longitudinal_ocp(cfg: LongitudinalOcpConfig, x0, ref: LongitudinalReference,
                           t_now: float, thrust_upper: float,
                           aero: ac.AeroConfig = ac.AeroConfig(), wind=(0.0, 0.0)) -> OcpProblem:
    """Longitudinal OCP.

    ``x0`` is the 9-vector ``[x_D, V_N, V_D, theta, q, T, de, dT, d_de]``
    (m, m/s, rad, rad/s, N, deg, N/s, deg/s); the trailing rates seed the
    input guess.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (9,):
        raise ValueError("longitudinal OCP state must have 9 components")
    u0 = np.clip(x0[7:], -np.array([cfg.thrust_rate_limit, cfg.elevator_rate_limit]),
                 [cfg.thrust_rate_limit, cfg.elevator_rate_limit])
    x0 = x0[:7]
    if not thrust_upper >= 0:
        raise ValueError("thrust upper bound must be non-negative")
    grid = lgl_grid(cfg.n_points - 1)
    inf = np.inf
    x_lb = np.array([-cfg.height_max, cfg.V_N_min, -cfg.V_D_max, -inf, -inf, 0.0,
                     -cfg.elevator_limit])
    x_ub = np.array([-cfg.height_min, cfg.V_N_max, cfg.V_D_max, inf, inf, thrust_upper,
                     cfg.elevator_limit])
    u_lb = np.array([-cfg.thrust_rate_limit, -cfg.elevator_rate_limit])
    u_ub = -u_lb
    # keep the pinned state consistent with the box
    x0 = np.clip(x0, x_lb, x_ub)

    t_nodes = t_now + grid.times(0.0, cfg.horizon)
    y_ref = np.zeros((grid.size, 7))
    y_ref[:, 0] = ref.x_D(t_nodes)
    y_ref[:, 1] = ref.V_T_ref
    y_ref[:, 2] = ref.V_D(t_nodes)
    weights = np.array([cfg.Q_x, cfg.Q_VT, cfg.Q_VD, cfg.Q_T, cfg.Q_de, cfg.Q_q, cfg.Q_a])
    model = longitudinal_node_model(aero, wind)
    return OcpProblem(grid, cfg.horizon, 7, 2, model, x0, y_ref, weights,
                      x_scale=np.array([50.0, 50.0, 3.0, 0.1, 0.1, 1000.0, 10.0]),
                      u_scale=np.array([2000.0, 50.0]),
                      x_lb=x_lb, x_ub=x_ub, u_lb=u_lb, u_ub=u_ub,
                      names=LONG_OCP_STATE_NAMES + LONG_OCP_INPUT_NAMES, u0=u0)


# --------------------------------------------------------------------------
# receding-horizon controllers


@dataclass
class StepDiagnostics:
    status: str
    iterations: int
    kkt: float
    defect: float
    bound_violation: float
    accepted: bool
    thrust_upper: float = np.nan


class RateController:
    """Receding-horizon angular-rate controller.

    Keeps the integrated rate errors and the last applied surface deflections
    as part of its own state.
    """

    def __init__(self, cfg: RateOcpConfig = RateOcpConfig(),
                 aero: ac.AeroConfig = ac.AeroConfig(), period: float = 0.02,
                 initial_deflections=(0.0, 0.0, 0.0)):
        self.cfg = cfg
        self.aero = aero
        self.period = period
        self.integrals = np.zeros(3)
        self.deflections = np.asarray(initial_deflections, dtype=float).copy()  # de, da, dr
        self.rates = np.zeros(3)
        self.previous: OcpSolution | None = None
        self.options = SqpOptions(tol=cfg.tol, max_iter=cfg.max_iter)

    def step(self, x_plant, demands, wind=None, thrust: float = 0.0, scale=None):
        """Return ``(de, da, dr)`` in degrees and the solver diagnostics.

        ``demands`` are ``(p, q, r)`` in rad/s; ``scale`` is the controller's
        belief about the control-derivative efficiencies (oracle FDI input).
        """
        x_plant = np.asarray(x_plant, dtype=float)
        dem_deg = np.asarray(demands, dtype=float) * ac.RAD2DEG
        omega = x_plant[9:12] * ac.RAD2DEG
        x0 = np.concatenate([omega, self.integrals, self.deflections, self.rates])
        cond = FlightCondition.from_state(x_plant, wind, thrust)
        ocp = build_rate_ocp(self.cfg, x0, dem_deg, cond, self.aero, scale)
        sol = solve(ocp, self.previous, shift=self.period, options=self.options)
        accepted = sol.converged
        if accepted:
            new = sol.state_at(self.period)[6:9]
            self.rates = sol.control_at(self.period)
            self.previous = sol
        else:
            new = self.deflections.copy()
            self.previous = None
            log.debug("rate NMPC %s after %d iterations; holding controls", sol.status, sol.iterations)
        lim = self.cfg.surface_limit
        self.deflections = np.clip(new, -lim, lim)
        self.integrals = self.integrals + (omega - dem_deg) * self.period
        diag = StepDiagnostics(sol.status, sol.iterations, sol.kkt, sol.defect,
                               sol.bound_violation, accepted)
        return self.deflections.copy(), diag


class LongitudinalController:
    """Receding-horizon height/airspeed controller with an FDI-updated thrust ceiling.

    Commands are thrust (N, the controller's belief about delivered force) and
    elevator (deg). ``throttle`` converts the thrust command to a throttle
    setting through the current estimate of the engine's remaining power.
    """

    POWER_TAU = 1.0  # s, low-pass on the power-fraction estimate

    def __init__(self, cfg: LongitudinalOcpConfig, ref: LongitudinalReference,
                 aero: ac.AeroConfig = ac.AeroConfig(), period: float = 0.05,
                 initial_thrust: float = 0.0, initial_elevator: float = 0.0,
                 wind=(0.0, 0.0)):
        self.cfg = cfg
        self.ref = ref
        self.aero = aero
        self.period = period
        self.wind = tuple(wind)
        self.thrust_cmd = float(initial_thrust)
        self.elevator = float(initial_elevator)
        self.power_estimate = 1.0
        self._power_sampled = False
        self._throttle_hist: deque[float] = deque(maxlen=max(int(round(1.0 / period)), 1))
        self.rates = np.zeros(2)
        self.previous: OcpSolution | None = None
        self.options = SqpOptions(tol=cfg.tol, max_iter=cfg.max_iter)

    def thrust_ceiling(self, height: float, V_t: float, fault_flag: bool,
                       estimate: float | None = None, sigma: float | None = None,
                       applied_throttle: float | None = None) -> float:
        """Upper thrust bound: full engine map, or the estimated power fraction once flagged.

        The power fraction is the filter's thrust over the nominal thrust at
        the applied throttle. It is only sampled while the throttle has been
        steady for a second, since the filter lags throttle steps, and is
        low-passed with ``POWER_TAU``.
        """
        t_max = float(ac.max_thrust(max(height, 0.0), V_t))
        if applied_throttle is not None:
            self._throttle_hist.append(float(applied_throttle))
        if not fault_flag or estimate is None:
            return t_max
        hist = self._throttle_hist
        steady = (len(hist) == hist.maxlen and min(hist) >= 0.2
                  and max(hist) - min(hist) < 0.05)
        if steady:
            ratio = float(np.clip(estimate / (t_max * np.mean(hist)), 0.0, 1.0))
            if not self._power_sampled:
                self.power_estimate = ratio
                self._power_sampled = True
            else:
                self.power_estimate += min(self.period / self.POWER_TAU, 1.0) * (ratio - self.power_estimate)
        ceiling = self.power_estimate * t_max + 2.0 * (sigma or 0.0)
        return float(min(max(ceiling, 0.0), t_max))

    def throttle(self, height: float, V_t: float) -> float:
        t_avail = float(ac.max_thrust(max(height, 0.0), V_t)) * max(self.power_estimate, 1e-3)
        return float(np.clip(self.thrust_cmd / t_avail, 0.0, 1.0))

    def step(self, t: float, x_long, thrust_upper: float):
        """One control update from the 5-state measurement at time ``t``."""
        x_long = np.asarray(x_long, dtype=float)
        self.thrust_cmd = min(self.thrust_cmd, thrust_upper)
        x0 = np.concatenate([x_long, [self.thrust_cmd, self.elevator], self.rates])
        ocp = build_longitudinal_ocp(self.cfg, x0, self.ref, t, thrust_upper, self.aero, self.wind)
        sol = solve(ocp, self.previous, shift=self.period, options=self.options)
        accepted = sol.converged
        if accepted:
            nxt = sol.state_at(self.period)
            self.thrust_cmd = float(np.clip(nxt[5], 0.0, thrust_upper))
            self.elevator = float(np.clip(nxt[6], -self.cfg.elevator_limit, self.cfg.elevator_limit))
            self.rates = sol.control_at(self.period)
            self.previous = sol
        else:
            self.previous = None
            log.debug("longitudinal NMPC %s at t=%.2f; holding controls", sol.status, t)
        diag = StepDiagnostics(sol.status, sol.iterations, sol.kkt, sol.defect,
                               sol.bound_violation, accepted, thrust_upper)
        return self.thrust_cmd, self.elevator, diag
