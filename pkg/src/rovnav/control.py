"""Pure pursuit waypoint following at constant forward speed."""

import math
from dataclasses import asdict, dataclass
from typing import List, NamedTuple, Sequence, Tuple

from .frames import angle_diff, wrap_angle


class Waypoint(NamedTuple):
    x: float
    y: float
    z: float = 0.0


class DegenerateSegmentError(ValueError):
    pass


class EmptyWaypointsError(ValueError):
    pass


@dataclass(frozen=True)
class ControllerConfig:
    """Pure pursuit and inner-loop settings.

    ``look_ahead`` (L_d), ``vehicle_length`` (L) and ``gain`` follow the
    published tuning; the remaining fields configure the actuation loops that
    turn (speed, yaw rate, depth) commands into a body wrench.
    """

    look_ahead: float = 1.0
    vehicle_length: float = 1.0
    gain: float = 0.3
    vicinity_radius: float = 0.5
    cruise_speed: float = 0.3
    surge_gain: float = 500.0  # N per m/s
    yaw_rate_gain: float = 1000.0  # N m per rad/s
    heave_gain: float = 100.0  # N per m
    depth_deadband: float = 0.5  # m

    def violations(self) -> List[str]:
        out = []
        for name in ("look_ahead", "vehicle_length", "vicinity_radius"):
            if not getattr(self, name) > 0:
                out.append(f"controller.{name} must be > 0")
        if not 0 < self.cruise_speed <= 0.3:
            out.append("controller.cruise_speed must be in (0, 0.3] m/s")
        for name in ("gain", "surge_gain", "yaw_rate_gain", "heave_gain", "depth_deadband"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                out.append(f"controller.{name} must be finite and >= 0")
        return out

    def to_dict(self) -> dict:
        return asdict(self)


def look_ahead_point(
    x: float, y: float, target: Waypoint, prev: Waypoint, look_ahead: float
) -> Tuple[float, float]:
    """Point ``look_ahead`` metres past the projection of (x, y) onto the segment, clamped to the target."""
    dx, dy = target.x - prev.x, target.y - prev.y
    seg = math.hypot(dx, dy)
    if seg < 1e-9:
        raise DegenerateSegmentError(f"waypoints {prev} and {target} coincide in xy")
    ex, ey = dx / seg, dy / seg
    s = (x - prev.x) * ex + (y - prev.y) * ey
    s = min(max(s, 0.0) + look_ahead, seg)
    return prev.x + s * ex, prev.y + s * ey


def heading_error(pose: Sequence[float], target: Waypoint, prev: Waypoint, cfg: ControllerConfig) -> float:
    """Angle alpha in (-pi, pi] between the pursuit bearing and the vehicle heading.

    Both angles are taken in [0, 2 pi) before differencing. On the segment the
    pursuit bearing equals the segment slope.
    """
    lx, ly = look_ahead_point(pose[0], pose[1], target, prev, cfg.look_ahead)
    bearing = wrap_angle(math.atan2(ly - pose[1], lx - pose[0]))
    return angle_diff(bearing, wrap_angle(pose[5]))


def steering_from_alpha(alpha: float, cfg: ControllerConfig) -> float:
    """``delta = atan(L * 2 sin(alpha) / L_d)``."""
    curvature = 2.0 * math.sin(alpha) / cfg.look_ahead
    return math.atan(curvature * cfg.vehicle_length)


def steering(pose: Sequence[float], target: Waypoint, prev: Waypoint, cfg: ControllerConfig) -> float:
    """Pure pursuit steering angle toward ``target`` along the segment from ``prev``."""
    return steering_from_alpha(heading_error(pose, target, prev, cfg), cfg)


def advance_waypoint(
    pose: Sequence[float], waypoints: Sequence[Waypoint], index: int, cfg: ControllerConfig
) -> Tuple[int, bool]:
    """Skip past every waypoint the vehicle has reached.

    A waypoint counts as reached when the vehicle is within the vicinity
    radius of it, or has moved past it along the segment leading to it (so a
    vehicle whose turning circle is wider than the radius cannot orbit it).
    Returns the new target index and whether the final waypoint was reached.
    """
    if not waypoints:
        raise EmptyWaypointsError("no waypoints")
    if not 0 <= index < len(waypoints):
        raise IndexError(f"waypoint index {index} out of range")
    last = len(waypoints) - 1
    while _reached(pose, waypoints, index, cfg.vicinity_radius):
        if index == last:
            return index, True
        index += 1
    return index, False


def _reached(pose, waypoints, index, radius) -> bool:
    wp = waypoints[index]
    if math.hypot(pose[0] - wp.x, pose[1] - wp.y) < radius:
        return True
    if index == 0:
        return False
    prev = waypoints[index - 1]
    dx, dy = wp.x - prev.x, wp.y - prev.y
    seg2 = dx * dx + dy * dy
    if seg2 == 0.0:
        return True
    return ((pose[0] - prev.x) * dx + (pose[1] - prev.y) * dy) >= seg2


def command(delta: float, cfg: ControllerConfig) -> Tuple[float, float]:
    """(surge speed [m/s], yaw rate [rad/s]) for a steering angle."""
    return cfg.cruise_speed, cfg.gain * delta
