"""RexROV thruster geometry, thrust resolution, lookup and allocation."""

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .dynamics import Wrench6

N_THRUSTERS = 8

# Thruster positions w.r.t. CG [m]
DEFAULT_POSITIONS = (
    (-0.890895, 0.334385, -0.528822),
    (-0.890895, -0.334385, -0.528822),
    (0.890895, 0.334385, -0.528822),
    (0.890895, -0.334385, -0.528822),
    (-0.412125, 0.505415, -0.129),
    (-0.412125, -0.505415, -0.129),
    (0.412125, 0.505415, -0.129),
    (0.412125, -0.505415, -0.129),
)

# Thruster orientations (phi, theta, psi) [deg]
DEFAULT_ORIENTATIONS_DEG = (
    (0.0, 74.53, -53.21),
    (0.0, 74.53, 53.21),
    (0.0, 105.47, 53.21),
    (0.0, 105.47, -53.21),
    (0.0, 0.0, 45.0),
    (0.0, 0.0, 45.0),
    (0.0, 0.0, 135.0),
    (0.0, 0.0, -135.0),
)

# rows of the allocation matrix that the reduced model actuates
CONTROLLED_AXES = (0, 1, 2, 5)


class AllocationError(ValueError):
    """Raised when the thruster layout cannot realize the controlled axes."""


@dataclass(frozen=True)
class ThrusterLayout:
    """Eight-thruster geometry.

    ``positions`` is (8, 3) in metres and ``orientations`` (8, 3) in radians.
    ``printed_heave`` switches the heave sum to the literal published form
    (thrusters 1..3, ``sin psi``) for comparison studies.
    """

    positions: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_POSITIONS))
    orientations: np.ndarray = field(
        default_factory=lambda: np.radians(np.array(DEFAULT_ORIENTATIONS_DEG))
    )
    printed_heave: bool = False

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        ori = np.array(self.orientations, dtype=float)
        if pos.shape != (N_THRUSTERS, 3) or ori.shape != (N_THRUSTERS, 3):
            raise ValueError("a RexROV layout has exactly 8 thrusters with 3 coordinates each")
        pos.setflags(write=False)
        ori.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "orientations", ori)
        object.__setattr__(self, "_matrix", _build_matrix(pos, ori, self.printed_heave))

    @classmethod
    def from_degrees(cls, positions, orientations_deg, printed_heave: bool = False):
        return cls(np.asarray(positions, float), np.radians(np.asarray(orientations_deg, float)), printed_heave)

    @property
    def matrix(self) -> np.ndarray:
        """6x8 map from per-thruster thrust to body wrench."""
        return self._matrix


def _build_matrix(pos: np.ndarray, ori: np.ndarray, printed_heave: bool) -> np.ndarray:
    theta, psi = ori[:, 1], ori[:, 2]
    lx, ly = pos[:, 0], pos[:, 1]
    pitched = np.arange(N_THRUSTERS) < 4
    B = np.zeros((6, N_THRUSTERS))
    B[0] = np.where(pitched, np.cos(theta) * np.cos(psi), np.cos(psi))
    B[1] = np.where(pitched, np.cos(theta) * np.sin(psi), np.sin(psi))
    if printed_heave:
        B[2, 1:4] = np.sin(psi[1:4])
    else:
        B[2, :4] = np.sin(theta[:4])
    # roll and pitch moments are not modelled (rows 3, 4 stay zero)
    B[5] = lx * np.sin(psi) - ly * np.cos(psi)
    return B


def wrench_from_thrusts(thrusts: Sequence[float], layout: ThrusterLayout) -> Wrench6:
    """Resolve eight thrust magnitudes [N] into a body wrench."""
    t = np.asarray(thrusts, dtype=float)
    if t.shape != (N_THRUSTERS,):
        raise ValueError(f"expected {N_THRUSTERS} thrust values, got shape {t.shape}")
    return Wrench6(*(layout.matrix @ t).tolist())


def allocate(
    desired: Sequence[float], layout: ThrusterLayout, clamp: Optional[float] = None, rcond: float = 1e-10
) -> np.ndarray:
    """Minimum-norm thrusts reproducing (Tx, Ty, Tz, Tpsi) of ``desired``.

    ``desired`` may be a 6-wrench (roll/pitch entries ignored) or a 4-vector.
    ``clamp`` limits each thrust to +-clamp newtons after the solve.
    """
    d = np.asarray(desired, dtype=float)
    target = d[list(CONTROLLED_AXES)] if d.shape == (6,) else d
    A = layout.matrix[list(CONTROLLED_AXES)]
    if np.linalg.matrix_rank(A, tol=rcond * np.abs(A).max()) < 4:
        raise AllocationError("thruster layout does not span surge, sway, heave and yaw")
    t = _pinv(layout) @ target
    if clamp is not None:
        t = np.clip(t, -clamp, clamp)
    return t


_PINV_CACHE = {}


def _pinv(layout: ThrusterLayout) -> np.ndarray:
    key = id(layout)
    hit = _PINV_CACHE.get(key)
    if hit is None or hit[0] is not layout:
        hit = (layout, np.linalg.pinv(layout.matrix[list(CONTROLLED_AXES)]))
        _PINV_CACHE[key] = hit
    return hit[1]


class EmptyTableError(ValueError):
    pass


@dataclass(frozen=True)
class ThrustLookup:
    """Piecewise-linear map from thruster command to thrust [N]."""

    commands: np.ndarray
    thrusts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.commands, dtype=float)
        t = np.asarray(self.thrusts, dtype=float)
        if c.size == 0:
            raise EmptyTableError("thrust lookup table is empty")
        if c.shape != t.shape or c.ndim != 1:
            raise ValueError("commands and thrusts must be 1-D and equally long")
        if np.any(np.diff(c) <= 0):
            raise ValueError("lookup commands must be strictly increasing")
        object.__setattr__(self, "commands", c)
        object.__setattr__(self, "thrusts", t)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "ThrustLookup":
        """Read a ``command,thrust_newtons`` table (header row required)."""
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        if not rows or [h.strip() for h in rows[0]] != ["command", "thrust_newtons"]:
            raise ValueError(f"{path}: header must be 'command,thrust_newtons'")
        data = [(float(a), float(b)) for a, b in rows[1:]]
        if not data:
            raise EmptyTableError(f"{path}: no table rows")
        c, t = zip(*data)
        return cls(np.array(c), np.array(t))

    @classmethod
    def default(cls) -> "ThrustLookup":
        """Identity table shipped with the package (command in newtons)."""
        ref = resources.files("rovnav") / "data" / "thrust_lookup.csv"
        with resources.as_file(ref) as p:
            return cls.from_csv(p)

    def thrust(self, cmd):
        return thrust_lookup(cmd, self)

    def command(self, thrust):
        """Inverse lookup; requires thrusts strictly increasing."""
        if np.any(np.diff(self.thrusts) <= 0):
            raise ValueError("inverse lookup needs a strictly increasing thrust column")
        return np.interp(thrust, self.thrusts, self.commands)


def thrust_lookup(cmd, table: ThrustLookup):
    """Interpolated thrust for ``cmd``; clamped to the table ends."""
    if table.commands.size == 0:
        raise EmptyTableError("thrust lookup table is empty")
    out = np.interp(cmd, table.commands, table.thrusts)
    return float(out) if np.ndim(out) == 0 else out
