"""Scenario orchestration: closed-loop stepping, fault injection, logging and metrics.

One fixed 0.01 s step does, in order: environment, sensors, filter, fault
detection, controller (at its own period), fault injection, plant.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import aircraft as ac
from . import environment as env
from . import estimation as est
from . import guidance as gd
from . import nmpc

log = logging.getLogger(__name__)

PLANT_STEP = 0.01
PLANTS = ("6dof", "longitudinal")
CONTROLLERS = ("nmpc-rate", "nmpc-longitudinal", "pid-harness")
FDI_MODES = ("none", "oracle", "estimated")
FAULT_KINDS = ("surface-efficiency", "engine-power-loss")
SURFACES = ("elevator", "aileron", "rudder")

COMPLETED = "completed"
CRASH = "crash"
STALL = "stall"
DIVERGENCE = "divergence"

HYGIENE_TOL = 1e-6


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class FaultEvent:
    kind: str
    target: str
    onset: float
    severity: float
    all_derivatives: bool = False

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise ConfigError(f"fault.kind must be one of {FAULT_KINDS}, got {self.kind!r}")
        valid = ("engine",) if self.kind == "engine-power-loss" else SURFACES
        if self.target not in valid:
            raise ConfigError(f"fault.target {self.target!r} invalid for {self.kind}")
        if not 0.0 <= self.severity <= 1.0:
            raise ConfigError(f"fault.severity={self.severity} outside [0, 1]")
        if self.onset < 0:
            raise ConfigError(f"fault.onset={self.onset} must be non-negative")

    @property
    def factor(self) -> float:
        """Remaining efficiency after the event."""
        return 1.0 - self.severity


@dataclass(frozen=True)
class PlantConfig:
    """The parts of the plant that faults act on."""

    scale: ac.DerivativeScaling = ac.DerivativeScaling()
    power_factor: float = 1.0


def inject_fault(plant: PlantConfig, event: FaultEvent, t: float) -> PlantConfig:
    """Apply ``event`` if it has started by time ``t``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    if t < event.onset or event.severity == 0.0:
        return plant
    if event.kind == "engine-power-loss":
        return replace(plant, power_factor=plant.power_factor * event.factor)
    if event.target not in SURFACES:
        raise ValueError(f"unknown fault target {event.target!r}")
    names = (ac.SURFACE_DERIVATIVES[event.target] if event.all_derivatives
             else (ac.PRIMARY_DERIVATIVE[event.target],))
    return replace(plant, scale=plant.scale.scaled(names, event.factor))


def plant_at(events, t: float, base: PlantConfig = PlantConfig()) -> PlantConfig:
    cfg = base
    for ev in events:
        cfg = inject_fault(cfg, ev, t)
    return cfg


@dataclass(frozen=True)
class EnvironmentSettings:
    wind: tuple = (0.0, 0.0, 0.0)  # steady NED air-mass velocity (m/s)
    turbulence: float = 0.7  # sigma_w (m/s); 0 disables
    noise_scale: float = 1.0  # multiplies every sensor noise sigma

    def __post_init__(self):
        if len(self.wind) != 3:
            raise ConfigError("environment.wind needs three NED components")
        if self.turbulence < 0:
            raise ConfigError("environment.turbulence must be non-negative")
        if self.noise_scale < 0:
            raise ConfigError("environment.noise_scale must be non-negative")


DEFAULT_WAYPOINTS = (
    (0.0, 0.0, -100.0),
    (1500.0, 0.0, -110.0),
    (2500.0, -800.0, -125.0),
    (3000.0, -2000.0, -140.0),
    (4500.0, -2500.0, -140.0),
)


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    plant: str = "longitudinal"
    controller: str = "nmpc-longitudinal"
    filter_variant: str = "none"
    fdi: str = "none"
    faults: tuple = ()
    duration: float = 135.0
    seed: int = 0
    controller_period: float | None = None
    environment: EnvironmentSettings = EnvironmentSettings()
    initial_height: float = 100.0
    initial_speed: float = 50.0
    reference: tuple = gd.LongitudinalReference.__dataclass_fields__["knots"].default
    speed_demand: float = 50.0
    waypoints: tuple = DEFAULT_WAYPOINTS
    acceptance_radius: float = 150.0
    roll_levels: tuple = gd.RollProfile.levels
    roll_segment: float = 10.0
    v_stall: float = 30.0
    expect_termination: bool = False
    output_dir: str = "runs"
    plots: bool = True

    def __post_init__(self):
        if not self.scenario_id:
            raise ConfigError("scenario.id must be non-empty")
        if self.plant not in PLANTS:
            raise ConfigError(f"scenario.plant must be one of {PLANTS}")
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"scenario.controller must be one of {CONTROLLERS}")
        if self.controller == "nmpc-rate" and self.plant != "6dof":
            raise ConfigError("scenario.controller nmpc-rate needs the 6dof plant")
        if self.controller == "nmpc-longitudinal" and self.plant != "longitudinal":
            raise ConfigError("scenario.controller nmpc-longitudinal needs the longitudinal plant")
        known = est.VARIANT_IDS + tuple(est.FILTER_BANKS)
        if self.filter_variant != "none" and self.filter_variant not in known:
            raise ConfigError(f"scenario.filter {self.filter_variant!r} is not a known variant")
        if self.filter_variant == "thrust-4" and self.plant != "longitudinal":
            raise ConfigError("scenario.filter thrust-4 needs the longitudinal plant")
        if self.filter_variant not in ("none", "thrust-4") and self.plant != "6dof":
            raise ConfigError(f"scenario.filter {self.filter_variant} needs the 6dof plant")
        if self.fdi not in FDI_MODES:
            raise ConfigError(f"scenario.fdi must be one of {FDI_MODES}")
        if self.fdi == "estimated" and self.filter_variant != "thrust-4":
            raise ConfigError("scenario.fdi estimated requires filter thrust-4")
        if not self.duration > 0:
            raise ConfigError("scenario.duration must be positive")
        for ev in self.faults:
            if not 0.0 <= ev.onset <= self.duration:
                raise ConfigError(f"fault.onset={ev.onset} outside [0, duration={self.duration}]")
            if self.plant == "longitudinal" and ev.kind == "surface-efficiency" \
                    and ev.target != "elevator":
                raise ConfigError(f"fault.target {ev.target} has no effect on the longitudinal plant")
        if self.controller_period is not None and not self.controller_period >= PLANT_STEP:
            raise ConfigError("scenario.controller_period must be at least the plant step")
        if self.v_stall < 0 or self.initial_speed <= self.v_stall:
            raise ConfigError("scenario.initial_speed must exceed v_stall")
        if self.initial_height <= 0:
            raise ConfigError("scenario.initial_height must be positive")
        try:
            gd.LongitudinalReference(self.reference, self.speed_demand)
            gd.WaypointPath(self.waypoints, self.acceptance_radius)
            gd.RollProfile(tuple(self.roll_levels), self.roll_segment)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def period(self) -> float:
        if self.controller_period is not None:
            return self.controller_period
        return {"nmpc-rate": 0.02, "nmpc-longitudinal": 0.05}.get(self.controller, PLANT_STEP)

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None):
        cfg = self
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=str(output_dir))
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        d["faults"] = [asdict(f) for f in self.faults]
        return d


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _get(section, key, conv, default, where):
    if key not in section:
        return default
    raw = section[key]
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}.{key}: cannot parse {raw!r}") from exc


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse the INI scenario format (see ``scenarios/README.md``)."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    if "scenario" not in cp:
        raise ConfigError("missing [scenario] section")
    sc = cp["scenario"]
    kw = {"scenario_id": sc.get("id", Path(source).stem)}
    for key, name, conv in (("plant", "plant", str), ("controller", "controller", str),
                            ("filter", "filter_variant", str), ("fdi", "fdi", str),
                            ("duration", "duration", float), ("seed", "seed", int),
                            ("controller_period", "controller_period", float),
                            ("initial_height", "initial_height", float),
                            ("initial_speed", "initial_speed", float),
                            ("v_stall", "v_stall", float),
                            ("expect_termination", "expect_termination", _bool)):
        if key in sc:
            kw[name] = _get(sc, key, conv, None, "scenario")
    known = {"id", "plant", "controller", "filter", "fdi", "duration", "seed",
             "controller_period", "initial_height", "initial_speed", "v_stall",
             "expect_termination"}
    unknown = set(sc) - known - set(cp.defaults())
    if unknown:
        raise ConfigError(f"scenario: unknown keys {sorted(unknown)}")

    if "environment" in cp:
        e = cp["environment"]
        kw["environment"] = EnvironmentSettings(
            wind=_get(e, "wind", _floats, (0.0, 0.0, 0.0), "environment"),
            turbulence=_get(e, "turbulence", float, 0.7, "environment"),
            noise_scale=_get(e, "noise_scale", float, 1.0, "environment"),
        )
    faults = []
    for name in cp.sections():
        if not name.startswith("fault"):
            continue
        f = cp[name]
        try:
            faults.append(FaultEvent(
                kind=f.get("kind", ""), target=f.get("target", ""),
                onset=_get(f, "onset", float, 0.0, name),
                severity=_get(f, "severity", float, 0.0, name),
                all_derivatives=_get(f, "all_derivatives", _bool, False, name)))
        except ConfigError as exc:
            raise ConfigError(f"[{name}] {exc}") from exc
    kw["faults"] = tuple(faults)
    if "reference" in cp:
        r = cp["reference"]
        if "knots" in r:
            pairs = [p.split(":") for p in r["knots"].replace(",", " ").split()]
            try:
                kw["reference"] = tuple((float(a), float(b)) for a, b in pairs)
            except ValueError as exc:
                raise ConfigError("reference.knots: expected time:height pairs") from exc
        kw["speed_demand"] = _get(r, "speed", float, 50.0, "reference")
    if "guidance" in cp:
        g = cp["guidance"]
        if "waypoints" in g:
            try:
                kw["waypoints"] = tuple(_floats(w) for w in g["waypoints"].split(";") if w.strip())
            except ValueError as exc:
                raise ConfigError("guidance.waypoints: expected 'N E D; N E D; ...'") from exc
        kw["acceptance_radius"] = _get(g, "radius", float, 150.0, "guidance")
    if "roll_profile" in cp:
        rp = cp["roll_profile"]
        kw["roll_levels"] = _get(rp, "levels", _floats, gd.RollProfile.levels, "roll_profile")
        kw["roll_segment"] = _get(rp, "segment", float, 10.0, "roll_profile")
    if "output" in cp:
        o = cp["output"]
        kw["output_dir"] = o.get("dir", "runs")
        kw["plots"] = _get(o, "plots", _bool, True, "output")
    try:
        return ScenarioConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, str(path))


# --------------------------------------------------------------------------
# logs


@dataclass
class TimeSeriesLog:
    """Per-step records with a fixed column schema plus run metadata."""

    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, record: dict) -> None:
        if not self.columns:
            self.columns = list(record)
        if len(record) != len(self.columns):
            raise ValueError("record does not match the log schema")
        self.rows.append([record[c] for c in self.columns])

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([repr(float(v)) for v in r])
        return buf.getvalue()

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        path.with_suffix(".meta.json").write_text(json.dumps(self.meta, indent=2, sort_keys=True))
        return path

    @classmethod
    def read(cls, path) -> "TimeSeriesLog":
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            columns = next(reader)
            rows = [[float(v) for v in r] for r in reader]
        meta_path = path.with_suffix(".meta.json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        return cls(columns, rows, meta)


@dataclass
class Metrics:
    completion: str
    termination_time: float | None
    rms: dict
    detection_latency: float | None
    innovation_in_bounds: dict
    constraint_violations: int
    solver_failures: int
    thrust_error_max: float | None = None  # fraction of max thrust, post-transient
    window: tuple = (0.0, 0.0)

    def to_dict(self) -> dict:
        return asdict(self)


def _rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x * x))) if x.size else float("nan")


def innovation_fraction(nu, sigma, k: float = 2.0) -> float:
    nu, sigma = np.asarray(nu, dtype=float), np.asarray(sigma, dtype=float)
    ok = np.isfinite(nu) & np.isfinite(sigma)
    if not ok.any():
        return float("nan")
    return float(np.mean(np.abs(nu[ok]) <= k * sigma[ok]))


def compute_metrics(log: TimeSeriesLog, transient: float = 10.0) -> Metrics:
    """Summaries over the post-fault window (the whole run when fault-free).

    ``transient`` seconds after onset are skipped for the thrust-estimate
    error; tracking RMS uses the full post-onset window.
    """
    if not len(log):
        raise ValueError("empty log")
    meta = log.meta
    t = log.column("t")
    onsets = [f["onset"] for f in meta.get("faults", [])]
    onset = min(onsets) if onsets else None
    start = onset if onset is not None else t[0]
    post = t >= start

    rms = {}
    for ch in ("p", "q", "r"):
        if f"{ch}_dem" in log:
            rms[ch] = _rms((log.column(ch) - log.column(f"{ch}_dem"))[post])
    if "height_ref" in log:
        rms["height"] = _rms((log.column("height") - log.column("height_ref"))[post])
        rms["V_t"] = _rms((log.column("V_t") - log.column("V_t_ref"))[post])

    latency = None
    if "fdi_flag" in log and onset is not None:
        flag = log.column("fdi_flag")
        hit = np.nonzero(flag > 0.5)[0]
        if hit.size:
            latency = float(t[hit[0]] - onset)

    bounds = {}
    for c in log.columns:
        if c.startswith("nu_") and not c.startswith("nu_sig_"):
            name = c[3:]
            bounds[name] = innovation_fraction(log.column(c), log.column(f"nu_sig_{name}"))

    violations = failures = 0
    if "nmpc_accepted" in log:
        acc = log.column("nmpc_accepted") > 0.5
        new = log.column("nmpc_new") > 0.5
        bad = (log.column("nmpc_defect") > HYGIENE_TOL) | (log.column("nmpc_bound_violation") > HYGIENE_TOL)
        violations = int(np.sum(acc & new & bad))
        failures = int(np.sum(new & ~acc))

    thrust_err = None
    if "T_est" in log:
        t0 = (onset + transient) if onset is not None else t[0] + transient
        m = (t >= t0) & (log.column("filter_ok") > 0.5)
        if m.any():
            t_max = ac.max_thrust(0.0, 0.0)
            thrust_err = float(np.max(np.abs(log.column("T_est")[m] - log.column("thrust")[m])) / t_max)

    return Metrics(completion=meta.get("completion", COMPLETED),
                   termination_time=meta.get("termination_time"),
                   rms=rms, detection_latency=latency, innovation_in_bounds=bounds,
                   constraint_violations=violations, solver_failures=failures,
                   thrust_error_max=thrust_err, window=(float(start), float(t[-1])))


# --------------------------------------------------------------------------
# closed loop


def _gust_to_ned(gust_b, phi, theta, psi):
    return ac.dcm_body_from_ned(phi, theta, psi).T @ gust_b


class _Sensors:
    """Measurement generation for the configured filters."""

    def __init__(self, cfg: ScenarioConfig, filters):
        scale = cfg.environment.noise_scale
        self.noise = env.NoiseSpec().scaled(scale)
        imu = est.DerivativeFilterNoise()
        self.sigma = {"V_EAS": self.noise.sigma_VEAS, "v_D": self.noise.sigma_vD,
                      "theta": self.noise.sigma_theta}
        for n in est.ACCEL_NAMES:
            self.sigma[n] = imu.sigma_acc * scale
        for n in est.RATE_NAMES:
            self.sigma[n] = imu.sigma_rate * scale
        self.names = tuple(dict.fromkeys(n for f in filters for n in f.measurement_names))

    def measure(self, truth: dict, rng) -> dict:
        if not self.names:
            return {}
        values = np.array([truth[n] for n in self.names])
        sig = np.array([self.sigma[n] for n in self.names])
        noisy = env.apply_sensor_noise(values, sig, rng)
        return dict(zip(self.names, noisy))


def _longitudinal_truth(x, wind2):
    V_t = float(np.hypot(x[1] - wind2[0], x[2] - wind2[1]))
    return {"V_EAS": V_t, "v_D": float(x[2]), "theta": float(x[3])}


def run_scenario(cfg: ScenarioConfig) -> tuple[TimeSeriesLog, Metrics]:
    """Run the closed loop and return the log and its metrics.

    Runtime terminations (crash, stall, divergence) end the run early and are
    recorded in the log metadata; they never raise.
    """
    dt = PLANT_STEP
    n_steps = int(round(cfg.duration / dt))
    n_ctrl = max(1, int(round(cfg.period / dt)))
    ss = np.random.SeedSequence(cfg.seed)
    rng_turb, rng_noise = (np.random.default_rng(s) for s in ss.spawn(2))
    aero = ac.AeroConfig()
    envs = cfg.environment
    steady = np.asarray(envs.wind, dtype=float)
    longitudinal = cfg.plant == "longitudinal"

    # trim and initial state, allowing for the steady wind along track
    wind2_steady = (float(steady[0]), float(steady[2]))
    trim = ac.trim_longitudinal(cfg.initial_speed, cfg.initial_height, 0.0, aero, wind2_steady)
    x = trim.state(cfg.initial_speed, cfg.initial_height)
    x[1] += wind2_steady[0]
    x[2] += wind2_steady[1]
    if not longitudinal:
        x = ac.embed_longitudinal(x)
        x[4] += steady[1]
    trim_pt = gd.TrimPoint(trim.theta, trim.delta_e, trim.delta_th, cfg.initial_height,
                           cfg.initial_speed)
    ref = gd.LongitudinalReference(cfg.reference, cfg.speed_demand)
    roll = gd.RollProfile(tuple(cfg.roll_levels), cfg.roll_segment)
    path = gd.WaypointPath(cfg.waypoints, cfg.acceptance_radius)
    speed_gains = replace(gd.SPEED_GAINS, trim=trim.delta_th)

    # filters
    if cfg.filter_variant == "none":
        filters = ()
    elif cfg.filter_variant == "thrust-4":
        x0 = np.array([x[1], x[2], x[3], est.thrust_filter().x0[3]])
        filters = (est.thrust_filter(x0=x0, aero=aero),)
    else:
        filters = est.build_filter_bank(cfg.filter_variant, aero=aero)
    fstates = [f.initial_state() for f in filters]
    sensors = _Sensors(cfg, filters)
    fdi = est.ThrustFdiState()
    prefix = [f"{f.variant_id}:" if len(filters) > 1 else "" for f in filters]

    # controllers
    ctl_long = ctl_rate = None
    if cfg.controller == "nmpc-longitudinal":
        ctl_long = nmpc.LongitudinalController(
            nmpc.LongitudinalOcpConfig(), ref, aero, period=cfg.period,
            initial_thrust=trim.thrust, initial_elevator=trim.delta_e, wind=wind2_steady)
    elif cfg.controller == "nmpc-rate":
        ctl_rate = nmpc.RateController(nmpc.RateOcpConfig(v_stall=cfg.v_stall), aero,
                                       period=cfg.period,
                                       initial_deflections=(trim.delta_e, 0.0, 0.0))
    pid_long = gd.HeightHoldState()
    pid_att = gd.AttitudeHarnessState()
    speed_integral = 0.0
    wp_index = 1

    if longitudinal:
        u = np.array([trim.delta_th, trim.delta_e])
    else:
        u = np.array([trim.delta_th, 0.0, trim.delta_e, 0.0])
    thrust_demand = trim.thrust
    thrust_upper = float(ac.max_thrust(cfg.initial_height, cfg.initial_speed))
    demands = np.zeros(3)
    diag = None
    diag_new = False
    ws = env.WindState(steady=steady.copy())
    prev_inputs = None
    log_ = TimeSeriesLog([])
    completion, t_end = COMPLETED, None

    for k in range(n_steps + 1):
        t = k * dt
        plant = plant_at(cfg.faults, t)

        # environment
        if longitudinal:
            C = ac.dcm_body_from_ned(0.0, x[3], 0.0)
            V_air = float(np.hypot(x[1] - ws.ned(C)[0], x[2] - ws.ned(C)[2]))
            height = -x[0]
        else:
            C = ac.dcm_body_from_ned(x[6], x[7], x[8])
            V_air = float(np.linalg.norm(x[3:6] - ws.ned(C)))
            height = -x[2]
        ws = env.dryden_step(ws, max(V_air, 1.0), max(height, 0.0), dt, envs.turbulence, rng_turb)
        wind3 = ws.ned(C)
        wind2 = np.array([wind3[0], wind3[2]])

        # sensors
        if longitudinal:
            truth = _longitudinal_truth(x, wind2)
            V_t = truth["V_EAS"]
            alpha = beta = 0.0
        else:
            V_t, alpha, beta = (float(v) for v in ac.air_data(C @ (x[3:6] - wind3)))
            truth = {"p": x[9], "q": x[10], "r": x[11]}
            if est.ACCEL_NAMES[0] in sensors.names:
                sf = est.specific_force(x, u, wind3, aero, plant.scale.as_array(),
                                        plant.power_factor)
                truth.update(zip(est.ACCEL_NAMES, sf))
        meas = sensors.measure(truth, rng_noise)

        # filters
        if longitudinal:
            cur_inputs = est.ThrustFilterInputs(float(x[4]), float(u[1]), float(height),
                                                float(wind2[0]), float(wind2[1]))
        else:
            qbar = 0.5 * float(ac.air_density(height)) * V_t * V_t
            T_now = float(ac.thrust(u[0], max(height, 0.0), V_t, plant.power_factor))
            cur_inputs = est.RateFilterInputs(V_t, alpha, beta, qbar, float(u[1]), float(u[2]),
                                              float(u[3]), T_now, float(x[9]), float(x[10]),
                                              float(x[11]))
        for i, f in enumerate(filters):
            s = fstates[i]
            if prev_inputs is not None:
                s = est.ukf_predict(s, f.process, f.config, prev_inputs)
            z = np.array([meas[n] for n in f.measurement_names])
            # the thrust filter's measurement model needs the wind now, the
            # process model the inputs held over the last step
            upd_inputs = cur_inputs if longitudinal else prev_inputs or cur_inputs
            fstates[i] = est.ukf_update(s, z, f.measure, f.config, upd_inputs)
        prev_inputs = cur_inputs

        # fault detection on thrust
        thrust_est = thrust_sig = None
        if cfg.filter_variant == "thrust-4" and not fstates[0].diverged:
            thrust_est = float(fstates[0].x[3])
            thrust_sig = float(fstates[0].sigma[3])
            fdi = est.thrust_fdi_step(fdi, thrust_demand, thrust_est, thrust_sig, t)

        # controller
        diag_new = False
        if k % n_ctrl == 0:
            diag_new = True
            if cfg.controller == "nmpc-longitudinal":
                if cfg.fdi == "estimated":
                    thrust_upper = ctl_long.thrust_ceiling(height, V_t, fdi.flag, thrust_est,
                                                           thrust_sig, applied_throttle=u[0])
                elif cfg.fdi == "oracle":
                    ctl_long.power_estimate = plant.power_factor
                    thrust_upper = plant.power_factor * float(ac.max_thrust(max(height, 0.0), V_t))
                else:
                    thrust_upper = ctl_long.thrust_ceiling(height, V_t, False)
                thrust_demand, de, diag = ctl_long.step(t, x, thrust_upper)
                u = np.array([ctl_long.throttle(height, V_t), de])
            elif cfg.controller == "nmpc-rate":
                g = gd.guidance_step(x, path, wp_index)
                wp_index = g.index
                demands = g.demands
                T_now = float(ac.thrust(u[0], max(height, 0.0), V_t, plant.power_factor))
                belief = plant.scale.as_array() if cfg.fdi == "oracle" else None
                surf, diag = ctl_rate.step(x, demands, wind3, T_now, belief)
                dth, speed_integral = gd.pi_speed_loop(V_t, cfg.speed_demand, speed_integral,
                                                       cfg.period, speed_gains)
                u = np.array([dth, surf[1], surf[0], surf[2]])
                thrust_demand = dth * float(ac.max_thrust(max(height, 0.0), V_t))
            elif longitudinal:
                u, pid_long = gd.pid_longitudinal(t, x, ref, trim_pt, pid_long, cfg.period,
                                                  wind2, speed_gains=speed_gains)
                thrust_demand = u[0] * float(ac.max_thrust(max(height, 0.0), V_t))
            else:
                phi_dem = gd.roll_demand_profile(t, roll)
                demands = np.array([phi_dem, 0.0, 0.0]) * gd.DEG
                u, pid_att = gd.pid_attitude_harness(phi_dem, x, trim_pt, pid_att, cfg.period,
                                                     wind3, speed_gains=speed_gains)
                thrust_demand = u[0] * float(ac.max_thrust(max(height, 0.0), V_t))

        # record
        T_applied = float(ac.thrust(u[0], max(height, 0.0), V_t, plant.power_factor))
        rec = {"t": t}
        if longitudinal:
            rec.update(zip(ac.LONG_STATE_NAMES, x))
            rec.update(height=height, V_t=V_t, height_ref=float(ref.height(t)),
                       V_t_ref=ref.V_T_ref, delta_th=u[0], delta_e=u[1])
        else:
            rec.update(zip(ac.STATE_NAMES, x))
            rec.update(height=height, V_t=V_t, alpha=alpha, beta=beta, delta_th=u[0],
                       delta_a=u[1], delta_e=u[2], delta_r=u[3])
            if cfg.controller == "pid-harness":
                rec.update(phi_dem=demands[0])
            else:
                rec.update(p_dem=demands[0], q_dem=demands[1], r_dem=demands[2])
        rec.update(wind_N=wind3[0], wind_E=wind3[1], wind_D=wind3[2],
                   thrust=T_applied, thrust_demand=thrust_demand, thrust_upper=thrust_upper,
                   power_factor=plant.power_factor)
        for i, f in enumerate(filters):
            s, pre = fstates[i], prefix[i]
            sig = s.sigma
            for j, name in enumerate(f.state_names):
                rec[f"{pre}{name}_est"] = s.x[j]
                rec[f"{pre}{name}_sig"] = sig[j]
            for j, name in enumerate(f.measurement_names):
                rec[f"{pre}meas_{name}"] = meas[name]
                rec[f"nu_{pre}{name}"] = s.nu[j] if s.nu is not None else math.nan
                rec[f"nu_sig_{pre}{name}"] = (s.innovation_sigma[j] if s.S is not None
                                             else math.nan)
            rec[f"{pre}filter_ok"] = float(not s.diverged)
        if cfg.filter_variant == "thrust-4":
            rec.update(fdi_counter=fdi.counter, fdi_flag=float(fdi.flag))
        if diag is not None or ctl_long or ctl_rate:
            d = diag
            rec.update(nmpc_new=float(diag_new and d is not None),
                       nmpc_accepted=float(d.accepted) if d else 0.0,
                       nmpc_iterations=d.iterations if d else 0,
                       nmpc_kkt=d.kkt if d else math.nan,
                       nmpc_defect=d.defect if d else 0.0,
                       nmpc_bound_violation=d.bound_violation if d else 0.0)
        log_.append({c: float(v) for c, v in rec.items()})

        if k == n_steps:
            break

        # plant
        try:
            wind_arg = wind2 if longitudinal else wind3
            with np.errstate(all="raise"):
                x_new = ac.integrate_step(x, u, wind_arg, dt, plant=cfg.plant,
                                          cfg=aero, scale=plant.scale.as_array(),
                                          power_factor=plant.power_factor)
        except (ValueError, FloatingPointError) as exc:
            completion, t_end = DIVERGENCE, t
            log.info("plant integration failed at t=%.2f: %s", t, exc)
            break
        if not np.all(np.isfinite(x_new)):
            completion, t_end = DIVERGENCE, t
            break
        x = x_new
        h_new = -x[0] if longitudinal else -x[2]
        if h_new <= 0.0:
            completion, t_end = CRASH, t + dt
            break
        if longitudinal:
            V_new = float(np.hypot(x[1] - wind2[0], x[2] - wind2[1]))
        else:
            V_new = float(np.linalg.norm(x[3:6] - wind3))
        if V_new <= cfg.v_stall:
            completion, t_end = STALL, t + dt
            break

    log_.meta = {
        "scenario": cfg.to_dict(),
        "faults": [asdict(f) for f in cfg.faults],
        "completion": completion,
        "termination_time": t_end,
        "fdi_flag_time": fdi.flag_time,
        "plant_step": dt,
        "controller_period": cfg.period,
    }
    return log_, compute_metrics(log_)


def write_outputs(cfg: ScenarioConfig, log_: TimeSeriesLog, metrics: Metrics,
                  out_dir=None) -> Path:
    """CSV log, metadata sidecar, metrics summary and (optionally) plots."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = log_.write(out / f"{cfg.scenario_id}.csv")
    (out / f"{cfg.scenario_id}.metrics.json").write_text(
        json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
    if cfg.plots:
        from .plots import plot_log
        plot_log(log_, out, cfg.scenario_id)
    return csv_path
