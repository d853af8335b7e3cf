"""Ground-truth propagation and the closed-loop run scheduler.

One run couples, at the filter rate (10 Hz by default):

    sample sensors -> filter step(s) -> pure pursuit on the estimate
    -> inner speed/yaw-rate/depth loops -> thrust allocation

while the six-axis truth model is integrated at the physics rate (100 Hz) with
the thrust held between filter ticks.
"""

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .control import ControllerConfig, Waypoint, advance_waypoint, command, steering
from .dynamics import VehicleParams, Wrench6, accel_full
from .estimation import BACKENDS, FilterConfig, FilterNoise, Localizer
from .evaluation import BUILTIN_COURSES, Course, ErrorReport, builtin_course, error_report, load_course
from .frames import SingularAttitudeError, body_to_ned, build_transform, wrap_angle
from .sensors import BiasState, SensorConfig, SensorFrame, SensorRng, advance_bias, sample_sensors
from .thrusters import ThrusterLayout, ThrustLookup, allocate, wrench_from_thrusts

DIVERGENCE_LIMIT = 1e6


class DivergenceError(RuntimeError):
    """A truth state component left the finite, bounded range."""

    def __init__(self, msg, log=None):
        super().__init__(msg)
        self.log = log


class RunTimeout(RuntimeError):
    """The final waypoint was not reached within the simulated time limit."""

    def __init__(self, msg, log=None):
        super().__init__(msg)
        self.log = log


@dataclass(frozen=True)
class TruthState:
    pose: np.ndarray  # (x, y, z, phi, theta, psi)
    vel: np.ndarray  # (u, v, w, p, q, r)
    t: float = 0.0


def _check_finite(pose: np.ndarray, vel: np.ndarray, t: float) -> None:
    if not (np.all(np.isfinite(pose)) and np.all(np.isfinite(vel))):
        raise DivergenceError(f"non-finite truth state at t={t:.3f}s")
    if np.max(np.abs(pose)) > DIVERGENCE_LIMIT or np.max(np.abs(vel)) > DIVERGENCE_LIMIT:
        raise DivergenceError(f"truth state magnitude exceeded {DIVERGENCE_LIMIT:g} at t={t:.3f}s")


def integrate_step(
    s: TruthState, tau: Sequence[float], params: VehicleParams, dt: float, method: str = "euler"
) -> TruthState:
    """Advance the truth state by ``dt``.

    ``euler`` is semi-implicit: velocity first, then pose with the new
    velocity. ``rk4`` is the classical fourth-order scheme on (pose, vel).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    pose = np.asarray(s.pose, dtype=float)
    vel = np.asarray(s.vel, dtype=float)
    if method == "euler":
        vel = vel + accel_full(vel, pose, tau, params) * dt
        pose = pose + build_transform(pose[3:]) @ vel * dt
    elif method == "rk4":

        def f(p, v):
            return build_transform(p[3:]) @ v, accel_full(v, p, tau, params)

        k1p, k1v = f(pose, vel)
        k2p, k2v = f(pose + 0.5 * dt * k1p, vel + 0.5 * dt * k1v)
        k3p, k3v = f(pose + 0.5 * dt * k2p, vel + 0.5 * dt * k2v)
        k4p, k4v = f(pose + dt * k3p, vel + dt * k3v)
        pose = pose + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        vel = vel + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    else:
        raise ValueError(f"unknown integrator {method!r}")
    pose[5] = wrap_angle(pose[5])
    t = s.t + dt
    _check_finite(pose, vel, t)
    return TruthState(pose, vel, t)


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines one closed-loop run.

    ``backend`` picks the filters to run: ``dynamic``, ``kinematic`` or
    ``both``. The controller is fed by the dynamic filter whenever it runs
    (or by ground truth when ``control_source == "truth"``).
    """

    course: str = "BE1"
    backend: str = "dynamic"
    seed: int = 0
    dt_physics: float = 0.01
    filter_rate: float = 10.0
    timeout: float = 1500.0
    integrator: str = "euler"
    control_source: str = "estimate"
    params: VehicleParams = field(default_factory=VehicleParams)
    sensors: SensorConfig = field(default_factory=SensorConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    thrust_table: Optional[str] = None
    thrust_clamp: Optional[float] = None
    printed_heave: bool = False

    @property
    def backends(self) -> Tuple[str, ...]:
        return BACKENDS if self.backend == "both" else (self.backend,)

    @property
    def steps_per_tick(self) -> int:
        return int(round(1.0 / (self.filter_rate * self.dt_physics)))

    @property
    def run_id(self) -> str:
        course = Path(self.course).stem if self.course not in BUILTIN_COURSES else self.course
        return f"{course}_{self.backend}_seed{self.seed}"

    def violations(self) -> List[str]:
        out = []
        if self.backend not in BACKENDS + ("both",):
            out.append(f"backend must be one of dynamic, kinematic, both (got {self.backend!r})")
        if self.integrator not in ("euler", "rk4"):
            out.append(f"integrator must be euler or rk4 (got {self.integrator!r})")
        if self.control_source not in ("estimate", "truth"):
            out.append(f"control_source must be estimate or truth (got {self.control_source!r})")
        if not self.dt_physics > 0:
            out.append("dt_physics must be > 0")
        if not self.filter_rate > 0:
            out.append("filter_rate must be > 0")
        if self.dt_physics > 0 and self.filter_rate > 0:
            ratio = 1.0 / (self.filter_rate * self.dt_physics)
            if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
                out.append("filter period must be a whole number of physics steps")
        for name in ("imu_rate", "dvl_rate"):
            if getattr(self.sensors, name) != self.filter_rate:
                out.append(f"sensors.{name} must equal filter_rate")
        for name in ("gps_rate", "depth_rate"):
            r = getattr(self.sensors, name)
            if r > 0 and abs(self.filter_rate / r - round(self.filter_rate / r)) > 1e-9:
                out.append(f"sensors.{name} must divide filter_rate")
        if not self.timeout > 0:
            out.append("timeout must be > 0")
        if self.thrust_clamp is not None and not self.thrust_clamp > 0:
            out.append("thrust_clamp must be > 0 when given")
        if self.course not in BUILTIN_COURSES and not Path(self.course).is_file():
            out.append(f"course {self.course!r} is neither a built-in id nor a readable file")
        out += [f"vehicle: {m}" for m in self.params.violations()]
        out += self.sensors.violations()
        out += self.controller.violations()
        out += self.filter.violations()
        return out

    def to_dict(self) -> dict:
        return asdict(self)

    def load_course(self) -> Course:
        return builtin_course(self.course) if self.course in BUILTIN_COURSES else load_course(self.course)

    def load_lookup(self) -> ThrustLookup:
        return ThrustLookup.default() if self.thrust_table is None else ThrustLookup.from_csv(self.thrust_table)


TRUTH_COLUMNS = ["t", "x", "y", "z", "phi", "theta", "psi", "u", "v", "w", "p", "q", "r",
                 "du", "dv", "dw", "dp", "dq", "dr"]
SENSOR_COLUMNS = ["t", "acc_x", "acc_y", "acc_z", "gyro_p", "gyro_q", "gyro_r", "heading",
                  "dvl_u", "dvl_v", "dvl_w", "gps_x", "gps_y", "depth"]
ESTIMATE_COLUMNS = ["t", "pred_x", "pred_y", "pred_z", "pred_psi", "x", "y", "z", "psi",
                    "P_xx", "P_yy", "P_zz", "P_psipsi", "innov_x", "innov_y", "innov_z", "innov_psi",
                    "acc_u", "acc_v", "acc_w", "acc_r"]
COMMAND_COLUMNS = ["t", "target_index", "delta", "surge_cmd", "yaw_rate_cmd", "depth_cmd",
                   "Tx", "Ty", "Tz", "Tpsi"] + [f"cmd{i}" for i in range(8)]


@dataclass
class RunLog:
    """Per-tick records of one run. Rows are lists of floats in the column order above."""

    config: RunConfig
    course: Course
    truth: List[list] = field(default_factory=list)
    sensors: List[list] = field(default_factory=list)
    estimates: Dict[str, List[list]] = field(default_factory=dict)
    commands: List[list] = field(default_factory=list)
    status: str = "running"
    max_roll_pitch: float = 0.0

    def truth_array(self) -> np.ndarray:
        return np.array(self.truth, dtype=float).reshape(-1, len(TRUTH_COLUMNS))

    def estimate_array(self, backend: str) -> np.ndarray:
        return np.array(self.estimates[backend], dtype=float).reshape(-1, len(ESTIMATE_COLUMNS))

    def metrics(self, backend: str) -> ErrorReport:
        truth = self.truth_array()
        est = self.estimate_array(backend)
        return error_report(truth[:, 1:3], est[:, 5:7], self.course.reference)

    def write(self, run_dir: Union[str, Path]) -> Path:
        """Persist as CSVs plus ``run.meta`` (config echo, seed, content hashes)."""
        d = Path(run_dir)
        d.mkdir(parents=True, exist_ok=True)
        files = {
            "truth.csv": (TRUTH_COLUMNS, self.truth),
            "sensors.csv": (SENSOR_COLUMNS, self.sensors),
            "commands.csv": (COMMAND_COLUMNS, self.commands),
        }
        for b, rows in self.estimates.items():
            files[f"est_{b}.csv"] = (ESTIMATE_COLUMNS, rows)
        hashes = {}
        for name, (cols, rows) in sorted(files.items()):
            data = csv_bytes(cols, rows)
            (d / name).write_bytes(data)
            hashes[name] = git_blob_sha1(data)
        content = hashlib.sha1("".join(f"{k} {v}\n" for k, v in sorted(hashes.items())).encode()).hexdigest()
        meta = {
            "run_id": self.config.run_id,
            "seed": self.config.seed,
            "status": self.status,
            "max_abs_roll_pitch": self.max_roll_pitch,
            "config": self.config.to_dict(),
            "files": hashes,
            "content_hash": content,
        }
        (d / "run.meta").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return d


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    f = float(v)
    return repr(f) if math.isfinite(f) else ""


def csv_bytes(columns: Sequence[str], rows: Sequence[Sequence]) -> bytes:
    lines = [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return ("\n".join(lines) + "\n").encode("utf-8")


def git_blob_sha1(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def control_wrench(
    u_cmd: float, r_cmd: float, z_ref: float, z_est: float, u_meas: float, r_meas: float,
    params: VehicleParams, cfg: ControllerConfig,
) -> np.ndarray:
    """Inner loops: surge speed, yaw rate and depth to a (Tx, Ty, Tz, Tpsi) request.

    Each loop is a proportional term plus feedforward of the model's steady
    damping (surge, yaw) or net buoyancy (heave). Sway is left free.
    """
    P = params
    Tx = cfg.surge_gain * (u_cmd - u_meas) - (P.Xu + P.Xuu * abs(u_cmd)) * u_cmd
    Tpsi = cfg.yaw_rate_gain * (r_cmd - r_meas) - (P.Nr + P.Nrr * abs(r_cmd)) * r_cmd
    depth_err = z_ref - z_est
    Tz = P.B - P.W
    if abs(depth_err) > cfg.depth_deadband:
        Tz += cfg.heave_gain * (depth_err - math.copysign(cfg.depth_deadband, depth_err))
    return np.array([Tx, 0.0, Tz, Tpsi])


def initial_truth(course: Course) -> TruthState:
    wp = course.waypoints[0]
    pose = np.array([wp.x, wp.y, wp.z, 0.0, 0.0, wrap_angle(course.start_heading)])
    return TruthState(pose, np.zeros(6), 0.0)


def run_episode(cfg: RunConfig, truth0: Optional[TruthState] = None) -> RunLog:
    """Simulate one closed-loop run until the final waypoint or the timeout.

    Raises RunTimeout / DivergenceError carrying the partial log in ``.log``.
    """
    problems = cfg.violations()
    if problems:
        raise ValueError("invalid run config: " + "; ".join(problems))
    course = cfg.load_course()
    wps = course.waypoints
    params = cfg.params
    layout = ThrusterLayout(printed_heave=cfg.printed_heave)
    lookup = cfg.load_lookup()
    rng = SensorRng(cfg.seed)
    tick_dt = 1.0 / cfg.filter_rate
    noise = FilterNoise.from_sensors(cfg.sensors, cfg.filter.q)
    filters = {
        b: Localizer(b, noise, params, layout, lookup, tick_dt, cfg.filter.p0 * np.eye(4),
                     cfg.filter.joseph, cfg.filter.velocity_guard)
        for b in cfg.backends
    }
    driver = "dynamic" if "dynamic" in filters else "kinematic"
    log = RunLog(cfg, course, estimates={b: [] for b in filters})

    truth = truth0 if truth0 is not None else initial_truth(course)
    bias = BiasState()
    commands = np.zeros(8)
    tau = np.zeros(6)
    index = 1
    n_steps = cfg.steps_per_tick
    tick = 0
    try:
        while True:
            t = tick * tick_dt
            acc = accel_full(truth.vel, truth.pose, tau, params)
            log.truth.append([t, *truth.pose, *truth.vel, *acc])
            frame = sample_sensors(truth.pose, truth.vel, acc, bias, cfg.sensors, rng, t, tick, cfg.filter_rate)
            bias = advance_bias(bias, cfg.sensors, rng)
            log.sensors.append(_sensor_row(frame))
            for b, flt in filters.items():
                flt.step(frame, commands)
                rec = flt.history[-1]
                log.estimates[b].append(
                    [t, *rec.prior, *rec.posterior, *rec.P_diag, *rec.innovation, *rec.acc]
                )

            if cfg.control_source == "truth":
                ctrl_pose = truth.pose
            else:
                x = filters[driver].state.x
                ctrl_pose = np.array([x[0], x[1], x[2], 0.0, 0.0, x[3]])
            index, done = advance_waypoint(ctrl_pose, wps, index, cfg.controller)
            if done:
                log.status = "done"
                break
            if t >= cfg.timeout:
                log.status = "timeout"
                raise RunTimeout(f"{cfg.run_id}: final waypoint not reached within {cfg.timeout:g}s", log)

            delta = steering(ctrl_pose, wps[index], wps[index - 1], cfg.controller)
            u_cmd, r_cmd = command(delta, cfg.controller)
            z_ref = wps[index].z
            desired = control_wrench(u_cmd, r_cmd, z_ref, ctrl_pose[2], frame.dvl[0], frame.imu_gyro[2],
                                     params, cfg.controller)
            thrusts = allocate(desired, layout, clamp=cfg.thrust_clamp)
            commands = lookup.command(thrusts)
            tau = np.asarray(wrench_from_thrusts(lookup.thrust(commands), layout))
            log.commands.append([t, index, delta, u_cmd, r_cmd, z_ref, *desired, *commands])

            for _ in range(n_steps):
                truth = integrate_step(truth, tau, params, cfg.dt_physics, cfg.integrator)
            log.max_roll_pitch = max(log.max_roll_pitch, abs(truth.pose[3]), abs(truth.pose[4]))
            tick += 1
    except DivergenceError as exc:
        log.status = "diverged"
        exc.log = log
        raise
    except SingularAttitudeError as exc:
        log.status = "diverged"
        raise DivergenceError(str(exc), log) from exc
    return log


def _sensor_row(f: SensorFrame) -> list:
    gps = f.gps if f.gps is not None else (None, None)
    return [f.t, *f.imu_accel, *f.imu_gyro, f.heading, *f.dvl, gps[0], gps[1], f.depth]
