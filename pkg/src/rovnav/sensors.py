"""Simulated IMU, DVL, GPS, pressure and compass sampled from ground truth.

Random streams
--------------
Every noise channel owns an independent ``numpy.random.Generator`` (PCG64)
seeded from ``SeedSequence(seed, spawn_key=(channel_id,))``. Channel ids are
fixed (see ``CHANNELS``), so adding a channel never perturbs the draws of
existing ones, and a run's sensor stream depends only on the seed and the
realized trajectory.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .frames import wrap_angle

CHANNELS = {
    "imu_accel": 0,
    "imu_gyro": 1,
    "imu_bias": 2,
    "dvl": 3,
    "gps": 4,
    "depth": 5,
    "heading": 6,
}


@dataclass(frozen=True)
class SensorConfig:
    """Noise variances and sample rates [Hz] of the sensor suite.

    Only ``imu_accel_var`` (0.004) is a published figure; the rest are
    plausible defaults. The seed lives on the run configuration and reaches
    the sensors through ``SensorRng``.
    """

    imu_accel_var: float = 0.004
    imu_gyro_var: float = 1e-5
    imu_bias_walk_var: float = 1e-5
    dvl_var: float = 1e-4
    gps_var: float = 0.25
    depth_var: float = 0.01
    heading_var: float = 1e-4
    imu_rate: float = 10.0
    dvl_rate: float = 10.0
    gps_rate: float = 10.0
    depth_rate: float = 10.0

    @classmethod
    def noiseless(cls, **kw) -> "SensorConfig":
        zero = dict(
            imu_accel_var=0.0,
            imu_gyro_var=0.0,
            imu_bias_walk_var=0.0,
            dvl_var=0.0,
            gps_var=0.0,
            depth_var=0.0,
            heading_var=0.0,
        )
        zero.update(kw)
        return cls(**zero)

    def violations(self) -> List[str]:
        out = []
        for name, val in asdict(self).items():
            if name.endswith("_var") and not (math.isfinite(val) and val >= 0):
                out.append(f"sensors.{name} must be a finite variance >= 0 (got {val})")
            if name.endswith("_rate") and not (math.isfinite(val) and val > 0):
                out.append(f"sensors.{name} must be > 0 (got {val})")
        return out

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BiasState:
    """IMU accelerometer bias [m/s^2]."""

    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class SensorFrame:
    """One filter tick worth of sensor readings.

    ``gps`` and ``depth`` are None on ticks where that sensor has no sample.
    """

    t: float
    imu_accel: np.ndarray
    imu_gyro: np.ndarray
    heading: float
    dvl: np.ndarray
    gps: Optional[np.ndarray] = None
    depth: Optional[float] = None


class SensorRng:
    """Per-channel generators derived from one integer seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gens: Dict[str, np.random.Generator] = {
            name: np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(cid,))))
            for name, cid in CHANNELS.items()
        }

    def __getitem__(self, channel: str) -> np.random.Generator:
        return self._gens[channel]

    def normal(self, channel: str, var: float, size=None):
        """Zero-mean Gaussian draw; variance 0 still consumes the stream."""
        return self._gens[channel].normal(0.0, math.sqrt(var), size)


def advance_bias(b: BiasState, cfg: SensorConfig, rng: SensorRng) -> BiasState:
    """One random-walk step of the accelerometer bias."""
    return BiasState(b.accel_bias + rng.normal("imu_bias", cfg.imu_bias_walk_var, 3))


def _on_tick(tick: int, rate: float, tick_rate: float) -> bool:
    every = max(1, int(round(tick_rate / rate)))
    return tick % every == 0


def sample_sensors(
    pose: Sequence[float],
    vel: Sequence[float],
    acc: Sequence[float],
    bias: BiasState,
    cfg: SensorConfig,
    rng: SensorRng,
    t: float,
    tick: int = 0,
    tick_rate: float = 10.0,
) -> SensorFrame:
    """Noisy readings of the true state at time ``t``.

    Parameters
    - pose, vel, acc: true NED pose, body velocity and body acceleration (6 each)
    - tick, tick_rate: index and rate of the sampling clock; GPS and depth are
      produced only on ticks matching their own rates
    """
    pose = np.asarray(pose, dtype=float)
    vel = np.asarray(vel, dtype=float)
    acc = np.asarray(acc, dtype=float)
    imu_accel = acc[:3] + bias.accel_bias + rng.normal("imu_accel", cfg.imu_accel_var, 3)
    imu_gyro = vel[3:] + rng.normal("imu_gyro", cfg.imu_gyro_var, 3)
    heading = wrap_angle(pose[5] + rng.normal("heading", cfg.heading_var))
    dvl = vel[:3] + rng.normal("dvl", cfg.dvl_var, 3)
    gps = None
    depth = None
    if _on_tick(tick, cfg.gps_rate, tick_rate):
        gps = pose[:2] + rng.normal("gps", cfg.gps_var, 2)
    if _on_tick(tick, cfg.depth_rate, tick_rate):
        depth = float(pose[2] + rng.normal("depth", cfg.depth_var))
    return SensorFrame(t, imu_accel, imu_gyro, heading, dvl, gps, depth)
