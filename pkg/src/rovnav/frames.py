"""SNAME body/NED frames and the Euler-angle velocity transform.

Conventions
- NED world frame (x north, y east, z down).
- BODY velocities ordered (u, v, w, p, q, r).
- Euler angles (phi, theta, psi) in the ZYX (yaw-pitch-roll) sequence.
"""

import math
from typing import NamedTuple, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# |cos(theta)| below this makes the angular-rate transform singular.
SINGULARITY_TOL = 1e-6


class SingularAttitudeError(ValueError):
    """Raised when pitch is too close to +-90 deg for the Euler rate transform."""


class Pose6(NamedTuple):
    """NED position [m] and Euler attitude [rad]."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0


class BodyVel6(NamedTuple):
    """Body-frame velocity: surge, sway, heave [m/s]; roll, pitch, yaw rate [rad/s]."""

    u: float = 0.0
    v: float = 0.0
    w: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0


class BodyAcc6(NamedTuple):
    """Body-frame acceleration [m/s^2, rad/s^2]."""

    du: float = 0.0
    dv: float = 0.0
    dw: float = 0.0
    dp: float = 0.0
    dq: float = 0.0
    dr: float = 0.0


def wrap_angle(a: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    w = math.fmod(a, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    # fmod of a tiny negative number can round up to exactly 2*pi
    if w >= TWO_PI:
        w -= TWO_PI
    return w


def angle_diff(a: float, b: float) -> float:
    """Shortest signed difference ``a - b`` mapped to (-pi, pi]."""
    d = math.fmod(a - b, TWO_PI)
    if d > math.pi:
        d -= TWO_PI
    elif d <= -math.pi:
        d += TWO_PI
    return d


def rotation_matrix(phi: float, theta: float, psi: float) -> np.ndarray:
    """Linear-velocity rotation BODY -> NED (ZYX Euler)."""
    cphi, sphi = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    return np.array(
        [
            [cpsi * cth, -spsi * cphi + cpsi * sth * sphi, spsi * sphi + cpsi * cphi * sth],
            [spsi * cth, cpsi * cphi + sphi * sth * spsi, -cpsi * sphi + sth * spsi * cphi],
            [-sth, cth * sphi, cth * cphi],
        ]
    )


def rate_transform(phi: float, theta: float) -> np.ndarray:
    """Angular-rate transform from body rates (p, q, r) to Euler rates."""
    cth = math.cos(theta)
    if abs(cth) < SINGULARITY_TOL:
        raise SingularAttitudeError(f"pitch {theta!r} rad is singular for the Euler rate transform")
    cphi, sphi = math.cos(phi), math.sin(phi)
    tth = math.tan(theta)
    return np.array(
        [
            [1.0, sphi * tth, cphi * tth],
            [0.0, cphi, -sphi],
            [0.0, sphi / cth, cphi / cth],
        ]
    )


def build_transform(attitude: Sequence[float]) -> np.ndarray:
    """Block-diagonal 6x6 transform ``diag(R, T)`` mapping body velocity to pose rate.

    Parameters
    - attitude: (phi, theta, psi) in radians

    Raises SingularAttitudeError when |cos(theta)| < 1e-6.
    """
    phi, theta, psi = (float(a) for a in attitude)
    J = np.zeros((6, 6))
    J[3:, 3:] = rate_transform(phi, theta)
    J[:3, :3] = rotation_matrix(phi, theta, psi)
    return J


def body_to_ned(attitude: Sequence[float], vel: Sequence[float]) -> np.ndarray:
    """NED pose rate ``J(attitude) @ vel``."""
    return build_transform(attitude) @ np.asarray(vel, dtype=float)
