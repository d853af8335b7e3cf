"""Localization of a simulated RexROV with a dynamic-model or IMU-driven EKF.

Modules
-------
frames       NED/body conventions and the Euler-angle transform
dynamics     six-axis vehicle model and its four-axis reduction
thrusters    thruster geometry, allocation and the command lookup table
sensors      simulated IMU, DVL, GPS, pressure and compass
estimation   the four-state EKF with ``dynamic`` and ``kinematic`` backends
control      pure pursuit waypoint following
simcore      truth integration and the closed-loop run scheduler
evaluation   courses, path error and RMSE metrics
config, experiment, cli   TOML experiments, batch runs and reports
"""

from .config import ConfigError, ExperimentSpec, parse_config
from .control import ControllerConfig, Waypoint
from .dynamics import VehicleParams, accel_full, accel_reduced
from .estimation import FilterConfig, Localizer
from .evaluation import BUILTIN_COURSES, Course, builtin_course, error_report, total_error
from .experiment import emit_plot_data, run_experiments, write_report
from .sensors import SensorConfig
from .simcore import RunConfig, RunLog, run_episode
from .thrusters import ThrusterLayout, ThrustLookup, allocate

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_COURSES",
    "ConfigError",
    "ControllerConfig",
    "Course",
    "ExperimentSpec",
    "FilterConfig",
    "Localizer",
    "RunConfig",
    "RunLog",
    "SensorConfig",
    "ThrustLookup",
    "ThrusterLayout",
    "VehicleParams",
    "Waypoint",
    "accel_full",
    "accel_reduced",
    "allocate",
    "builtin_course",
    "emit_plot_data",
    "error_report",
    "parse_config",
    "run_episode",
    "run_experiments",
    "total_error",
    "write_report",
]
