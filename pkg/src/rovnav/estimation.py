"""Four-state (x, y, z, psi) extended Kalman filter for the RexROV.

The predict step integrates body velocities and accelerations over one filter
period; two interchangeable sources supply the accelerations:

- ``dynamic``: the reduced 4-DoF model driven by DVL velocity, gyro yaw rate
  and the commanded thrusts.
- ``kinematic``: the IMU accelerometer, with yaw acceleration obtained by
  differencing successive gyro yaw-rate samples.

The measurement model is the identity (GPS x/y, pressure depth, compass
heading), so the update reduces to ``S = P + R``, ``K = P S^-1``.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import VehicleParams, accel_reduced
from .frames import angle_diff, wrap_angle
from .sensors import SensorConfig, SensorFrame
from .thrusters import ThrusterLayout, ThrustLookup, wrench_from_thrusts

BACKENDS = ("dynamic", "kinematic")

# variance assigned to a measurement channel that has no sample on a tick
MISSING_VAR = 1e9


class SingularInnovationError(np.linalg.LinAlgError):
    """The innovation covariance S cannot be inverted."""


@dataclass
class EstimatorState:
    """State [x, y, z, psi] and its 4x4 covariance."""

    x: np.ndarray
    P: np.ndarray

    def copy(self) -> "EstimatorState":
        return EstimatorState(self.x.copy(), self.P.copy())


@dataclass(frozen=True)
class FilterNoise:
    Q: np.ndarray
    R: np.ndarray

    @classmethod
    def from_sensors(cls, cfg: SensorConfig, q: float = 1e-4) -> "FilterNoise":
        """Default tuning: ``Q = q I`` and R matched to the sensor variances."""
        return cls(q * np.eye(4), np.diag([cfg.gps_var, cfg.gps_var, cfg.depth_var, cfg.heading_var]))


@dataclass(frozen=True)
class FilterConfig:
    """Filter tuning: ``Q = q I``, ``P0 = p0 I``; R defaults to the sensor variances."""

    q: float = 1e-4
    p0: float = 1.0
    joseph: bool = False
    velocity_guard: float = 0.01

    def violations(self) -> List[str]:
        out = []
        for name in ("q", "p0", "velocity_guard"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                out.append(f"filter.{name} must be finite and >= 0 (got {val})")
        return out

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PredictInputs:
    """Velocity (u, v, w, r), acceleration, previous acceleration and step."""

    vel: np.ndarray
    acc: np.ndarray
    acc_prev: np.ndarray
    dt: float


def predict_state(x: Sequence[float], inputs: PredictInputs, psi: Optional[float] = None) -> np.ndarray:
    """Second-order Taylor propagation of [x, y, z, psi] over ``inputs.dt``.

    Body surge/sway (and their accelerations) are rotated into NED by the
    heading ``psi`` (the state's own heading if not given); heave and yaw
    integrate directly.
    """
    x = np.asarray(x, dtype=float)
    if psi is None:
        psi = x[3]
    dt = inputs.dt
    u, v, w, r = inputs.vel
    du, dv, dw, dr = inputs.acc
    c, s = math.cos(psi), math.sin(psi)
    half = 0.5 * dt * dt
    out = np.array(
        [
            x[0] + (c * u - s * v) * dt + (c * du - s * dv) * half,
            x[1] + (s * u + c * v) * dt + (s * du + c * dv) * half,
            x[2] + w * dt + dw * half,
            x[3] + r * dt + dr * half,
        ]
    )
    out[3] = wrap_angle(out[3])
    return out


def transition_jacobian(inputs: PredictInputs, guard: float = 0.01) -> np.ndarray:
    """Diagonal transition matrix ``1 + (a/v) dt + (da dt)/(2 v)`` per state.

    Entries whose velocity magnitude is below ``guard`` are set to 1.
    """
    vel = np.asarray(inputs.vel, dtype=float)
    acc = np.asarray(inputs.acc, dtype=float)
    dacc = acc - np.asarray(inputs.acc_prev, dtype=float)
    dt = inputs.dt
    diag = np.ones(4)
    ok = np.abs(vel) >= guard
    diag[ok] = 1.0 + acc[ok] / vel[ok] * dt + dacc[ok] * dt / (2.0 * vel[ok])
    return np.diag(diag)


def predict(
    state: EstimatorState, inputs: PredictInputs, Q: np.ndarray, guard: float = 0.01
) -> EstimatorState:
    """Prior state and covariance ``F P F^T + Q``."""
    F = transition_jacobian(inputs, guard)
    return EstimatorState(predict_state(state.x, inputs), F @ state.P @ F.T + Q)


def innovation(z: Sequence[float], x_prior: Sequence[float]) -> np.ndarray:
    """``z - x_prior`` with the heading residual taken the short way round."""
    z = np.asarray(z, dtype=float)
    y = z - np.asarray(x_prior, dtype=float)
    y[3] = angle_diff(z[3], x_prior[3])
    return y


def update(
    prior: EstimatorState, z: Sequence[float], R: np.ndarray, joseph: bool = False
) -> Tuple[EstimatorState, np.ndarray]:
    """Identity-measurement update; returns the posterior and the innovation.

    With ``R == 0`` the gain is exactly the identity and the posterior is the
    measurement itself (heading wrapped), evaluated without the solve so no
    rounding creeps in.
    """
    P = prior.P
    S = P + R
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) > 1.0 / np.finfo(float).eps:
        raise SingularInnovationError("innovation covariance S = P + R is singular")
    y = innovation(z, prior.x)
    if not np.any(R):
        x = np.array(z, dtype=float)
        x[3] = wrap_angle(x[3])
        return EstimatorState(x, np.zeros((4, 4))), y
    K = np.linalg.solve(S.T, P.T).T
    x = prior.x + K @ y
    x[3] = wrap_angle(x[3])
    I_K = np.eye(4) - K
    if joseph:
        P_new = I_K @ P @ I_K.T + K @ R @ K.T
    else:
        P_new = I_K @ P
    P_new = 0.5 * (P_new + P_new.T)
    return EstimatorState(x, P_new), y


def ekf_step(
    state: EstimatorState,
    inputs: PredictInputs,
    z: Sequence[float],
    noise: FilterNoise,
    joseph: bool = False,
    guard: float = 0.01,
) -> EstimatorState:
    """Predict over one period, then fuse the measurement ``z``."""
    prior = predict(state, inputs, noise.Q, guard)
    post, _ = update(prior, z, noise.R, joseph)
    return post


def dynamic_acceleration(
    frame: SensorFrame,
    thrusts: Sequence[float],
    params: VehicleParams,
    layout: ThrusterLayout,
) -> np.ndarray:
    """Reduced-model (du, dv, dw, dr) from DVL velocity, gyro yaw rate and thrusts [N]."""
    vel = (frame.dvl[0], frame.dvl[1], frame.dvl[2], frame.imu_gyro[2])
    return accel_reduced(vel, wrench_from_thrusts(thrusts, layout), params)


def kinematic_acceleration(frame: SensorFrame, prev_yaw_rate: Optional[float] = None, dt: float = 0.1) -> np.ndarray:
    """IMU accelerations plus yaw acceleration from gyro differencing.

    ``prev_yaw_rate`` is the gyro yaw rate of the previous frame; on the first
    frame (None) the yaw acceleration is taken as zero.
    """
    dr = 0.0 if prev_yaw_rate is None else (frame.imu_gyro[2] - prev_yaw_rate) / dt
    return np.array([frame.imu_accel[0], frame.imu_accel[1], frame.imu_accel[2], dr])


def measurement(frame: SensorFrame, x_prior: Sequence[float], R: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Measurement vector and covariance for a frame.

    Channels missing on this tick are replaced by the prior (zero innovation)
    with their variance inflated to ``MISSING_VAR``.
    """
    z = np.array(x_prior, dtype=float)
    R = np.array(R, dtype=float)
    if frame.gps is not None:
        z[0], z[1] = frame.gps
    else:
        R[0, :] = R[:, 0] = R[1, :] = R[:, 1] = 0.0
        R[0, 0] = R[1, 1] = MISSING_VAR
    if frame.depth is not None:
        z[2] = frame.depth
    else:
        R[2, :] = R[:, 2] = 0.0
        R[2, 2] = MISSING_VAR
    z[3] = frame.heading
    return z, R


@dataclass
class StepRecord:
    t: float
    prior: np.ndarray
    posterior: np.ndarray
    P_diag: np.ndarray
    innovation: np.ndarray
    acc: np.ndarray


@dataclass
class Localizer:
    """One running filter of a given backend.

    Call ``step`` once per filter tick with that tick's sensor frame and the
    thruster commands in effect at the frame's time. Prediction over
    ``[t_k-1, t_k]`` uses the velocities and accelerations gathered at ``t_k-1``.
    """

    backend: str
    noise: FilterNoise
    params: VehicleParams = field(default_factory=VehicleParams)
    layout: ThrusterLayout = field(default_factory=ThrusterLayout)
    lookup: Optional[ThrustLookup] = None
    dt: float = 0.1
    P0: np.ndarray = field(default_factory=lambda: np.eye(4))
    joseph: bool = False
    guard: float = 0.01

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; expected one of {BACKENDS}")
        self.state: Optional[EstimatorState] = None
        self.history: List[StepRecord] = []
        self._pending: Optional[PredictInputs] = None
        self._acc_prev = np.zeros(4)
        self._yaw_rate_prev: Optional[float] = None

    def acceleration(self, frame: SensorFrame, commands: Sequence[float]) -> np.ndarray:
        if self.backend == "dynamic":
            thrusts = commands if self.lookup is None else self.lookup.thrust(np.asarray(commands, float))
            return dynamic_acceleration(frame, thrusts, self.params, self.layout)
        return kinematic_acceleration(frame, self._yaw_rate_prev, self.dt)

    def step(self, frame: SensorFrame, commands: Sequence[float]) -> EstimatorState:
        if self.state is None:
            if frame.gps is None or frame.depth is None:
                raise ValueError("the first frame must carry GPS and depth to initialize the filter")
            x0 = np.array([frame.gps[0], frame.gps[1], frame.depth, frame.heading])
            self.state = EstimatorState(x0, np.array(self.P0, dtype=float))
            prior, y = x0.copy(), np.zeros(4)
        else:
            prior_state = predict(self.state, self._pending, self.noise.Q, self.guard)
            z, R = measurement(frame, prior_state.x, self.noise.R)
            self.state, y = update(prior_state, z, R, self.joseph)
            prior = prior_state.x
        acc = self.acceleration(frame, commands)
        vel = np.array([frame.dvl[0], frame.dvl[1], frame.dvl[2], frame.imu_gyro[2]])
        self._pending = PredictInputs(vel, acc, self._acc_prev if self.history else acc, self.dt)
        self._acc_prev = acc
        self._yaw_rate_prev = float(frame.imu_gyro[2])
        self.history.append(
            StepRecord(frame.t, prior, self.state.x.copy(), np.diag(self.state.P).copy(), y, acc)
        )
        return self.state
