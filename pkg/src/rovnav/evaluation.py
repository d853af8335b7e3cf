"""Behavior-evaluation courses and trajectory error metrics."""

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .control import Waypoint

BUILTIN_COURSES = ("BE1", "BE2", "BE3")
COURSE_DEPTH = 20.0
REFERENCE_SPACING = 0.1


class UnknownCourseError(KeyError):
    pass


class EmptyPathError(ValueError):
    pass


@dataclass(frozen=True)
class Course:
    name: str
    waypoints: tuple
    reference: np.ndarray  # (n, 2) densified xy polyline

    @classmethod
    def from_waypoints(cls, name: str, waypoints: Sequence[Waypoint], spacing: float = REFERENCE_SPACING):
        wps = tuple(Waypoint(*map(float, w)) for w in waypoints)
        if len(wps) < 2:
            raise ValueError(f"course {name!r} needs at least two waypoints")
        return cls(name, wps, densify([(w.x, w.y) for w in wps], spacing))

    @property
    def start_heading(self) -> float:
        a, b = self.waypoints[0], self.waypoints[1]
        return math.atan2(b.y - a.y, b.x - a.x)


def densify(points: Sequence[Sequence[float]], spacing: float = REFERENCE_SPACING) -> np.ndarray:
    """Polyline through ``points`` resampled so no gap exceeds ``spacing``.

    Every input vertex is kept, in order.
    """
    pts = np.asarray(points, dtype=float)
    out = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(np.linalg.norm(b - a) / spacing)))
        s = np.arange(1, n + 1)[:, None] / n
        out.append(a + s * (b - a))
    return np.vstack(out)


# --- course geometry ---------------------------------------------------------


class _PathBuilder:
    """Turtle-style waypoint generator in the NED xy plane.

    Positive turns are clockwise seen from above (toward +y from +x).
    """

    def __init__(self, heading: float = 0.0, arc_step_deg: float = 10.0):
        self.x = self.y = 0.0
        self.heading = heading
        self.arc_step = math.radians(arc_step_deg)
        self.points = [(0.0, 0.0)]

    def straight(self, length: float, step: float = 2.5):
        n = max(1, int(math.ceil(length / step)))
        for i in range(1, n + 1):
            d = length * i / n
            self.points.append((self.x + d * math.cos(self.heading), self.y + d * math.sin(self.heading)))
        self.x, self.y = self.points[-1]
        return self

    def arc(self, radius: float, turn_deg: float):
        turn = math.radians(turn_deg)
        side = 1.0 if turn > 0 else -1.0
        # centre lies to the right for clockwise (positive) turns
        cx = self.x + radius * math.cos(self.heading + side * math.pi / 2)
        cy = self.y + radius * math.sin(self.heading + side * math.pi / 2)
        start = math.atan2(self.y - cy, self.x - cx)
        n = max(1, int(math.ceil(abs(turn) / self.arc_step)))
        for i in range(1, n + 1):
            a = start + turn * i / n
            self.points.append((cx + radius * math.cos(a), cy + radius * math.sin(a)))
        self.x, self.y = self.points[-1]
        self.heading += turn
        return self

    def corner(self, turn_deg: float):
        self.heading += math.radians(turn_deg)
        return self

    def waypoints(self, depth: float = COURSE_DEPTH) -> List[Waypoint]:
        return [Waypoint(round(x, 6), round(y, 6), depth) for x, y in self.points]


def generate_course_waypoints(name: str) -> List[Waypoint]:
    """Concrete waypoint realization of a built-in course.

    - BE1: 30 m straight, 10 m-radius 90 deg arc, 10 m straight, 120 deg corner, 15 m straight.
    - BE2: three alternating 10 m-radius half circles (sinusoid).
    - BE3: S-shaped lead-in (two reversed 10 m-radius 30 deg arcs), 15 m straight,
      10 m-radius 180 deg arc, 15 m straight (U shape).
    """
    if name == "BE1":
        b = _PathBuilder().straight(30).arc(10, 90).straight(10).corner(120).straight(15)
    elif name == "BE2":
        b = _PathBuilder().arc(10, 180).arc(10, -180).arc(10, 180)
    elif name == "BE3":
        b = _PathBuilder().arc(10, -30).arc(10, 30).straight(15).arc(10, 180).straight(15)
    else:
        raise UnknownCourseError(f"unknown course {name!r}; built-ins are {BUILTIN_COURSES}")
    return b.waypoints()


def write_course_csv(course_name: str, waypoints: Sequence[Waypoint], fh) -> None:
    fh.write(f"# name: {course_name}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x", "y", "z"])
    for wp in waypoints:
        w.writerow([repr(float(wp.x)), repr(float(wp.y)), repr(float(wp.z))])


def parse_course_csv(text: str, fallback_name: str = "course") -> Course:
    """Parse the ``# name:`` + ``x,y,z`` course format."""
    name = fallback_name
    rows = []
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if body.startswith("name:"):
                name = body[len("name:"):].strip()
            continue
        rows.append(s)
    if not rows or [c.strip() for c in rows[0].split(",")] != ["x", "y", "z"]:
        raise ValueError(f"course {name!r}: header row must be 'x,y,z'")
    wps = []
    for i, r in enumerate(rows[1:], start=2):
        parts = r.split(",")
        if len(parts) != 3:
            raise ValueError(f"course {name!r}: data row {i} needs 3 columns")
        wps.append(Waypoint(*(float(p) for p in parts)))
    return Course.from_waypoints(name, wps)


def load_course(path: Union[str, Path]) -> Course:
    p = Path(path)
    return parse_course_csv(p.read_text(), fallback_name=p.stem)


def builtin_course(course_id: str) -> Course:
    """One of the shipped courses BE1, BE2, BE3 (read from the package data files)."""
    if course_id not in BUILTIN_COURSES:
        raise UnknownCourseError(f"unknown course {course_id!r}; built-ins are {BUILTIN_COURSES}")
    text = (resources.files("rovnav") / "data" / "courses" / f"{course_id}.csv").read_text()
    return parse_course_csv(text, fallback_name=course_id)


def course_csv_text(course_id: str) -> str:
    buf = io.StringIO()
    write_course_csv(course_id, generate_course_waypoints(course_id), buf)
    return buf.getvalue()


# --- metrics -------------------------------------------------------------------


def point_to_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from points ``p`` (n, 2) to segments a->b (broadcast)."""
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.where(denom > 0, np.sum((p - a) * ab, axis=-1) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(p - proj, axis=-1)


def nearest_distances(path: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Distance from each path point to the reference polyline.

    A KD-tree over the reference vertices bounds the search: the nearest
    segment must have an endpoint within (nearest vertex distance + longest
    segment) of the query point.
    """
    path = np.asarray(path, dtype=float)[:, :2]
    ref = np.asarray(reference, dtype=float)[:, :2]
    if len(path) == 0 or len(ref) == 0:
        raise EmptyPathError("paths must be nonempty")
    if len(ref) == 1:
        return np.linalg.norm(path - ref[0], axis=1)
    seg_len = np.linalg.norm(np.diff(ref, axis=0), axis=1)
    max_seg = float(seg_len.max())
    tree = cKDTree(ref)
    d_vertex, _ = tree.query(path)
    out = np.empty(len(path))
    last_seg = len(ref) - 2
    for i, (p, dv) in enumerate(zip(path, d_vertex)):
        idx = np.asarray(tree.query_ball_point(p, dv + max_seg + 1e-12), dtype=int)
        segs = np.unique(np.concatenate([idx - 1, idx]))
        segs = segs[(segs >= 0) & (segs <= last_seg)]
        out[i] = point_to_segment_distance(p, ref[segs], ref[segs + 1]).min()
    return out


def total_error(path: np.ndarray, reference: np.ndarray) -> float:
    """Mean xy distance from each path sample to the reference polyline."""
    return float(np.mean(nearest_distances(path, reference)))


def axis_rmse(estimates: Sequence[float], truth: Sequence[float]) -> float:
    """Root-mean-square difference of two time-aligned series."""
    e = np.asarray(estimates, dtype=float)
    t = np.asarray(truth, dtype=float)
    if e.shape != t.shape:
        raise ValueError(f"length mismatch: {e.shape} vs {t.shape}")
    if e.size == 0:
        raise EmptyPathError("series are empty")
    return float(np.sqrt(np.mean((e - t) ** 2)))


@dataclass(frozen=True)
class ErrorReport:
    total: float
    x_kalman: float
    y_kalman: float
    total_estimate: float


def error_report(truth_xy: np.ndarray, est_xy: np.ndarray, reference: np.ndarray) -> ErrorReport:
    """Total (truth vs reference), per-axis estimate RMSE, and estimate-vs-reference total."""
    truth_xy = np.asarray(truth_xy, dtype=float)
    est_xy = np.asarray(est_xy, dtype=float)
    return ErrorReport(
        total=total_error(truth_xy, reference),
        x_kalman=axis_rmse(est_xy[:, 0], truth_xy[:, 0]),
        y_kalman=axis_rmse(est_xy[:, 1], truth_xy[:, 1]),
        total_estimate=total_error(est_xy, reference),
    )
