import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rovnav.control import Waypoint
from rovnav.evaluation import (
    BUILTIN_COURSES,
    Course,
    EmptyPathError,
    UnknownCourseError,
    axis_rmse,
    builtin_course,
    course_csv_text,
    densify,
    error_report,
    generate_course_waypoints,
    load_course,
    parse_course_csv,
    total_error,
    write_course_csv,
)


def brute_force_total(path, ref):
    """Mean distance to the polyline by scanning every (point, segment) pair."""
    dists = []
    for p in path:
        best = math.inf
        for a, b in zip(ref[:-1], ref[1:]):
            ab = b - a
            L2 = ab @ ab
            t = 0.0 if L2 == 0 else min(1.0, max(0.0, (p - a) @ ab / L2))
            best = min(best, math.hypot(*(p - (a + t * ab))))
        dists.append(best)
    return sum(dists) / len(dists)


def test_identical_paths_have_zero_error():
    ref = builtin_course("BE1").reference
    assert total_error(ref, ref) == 0.0


def test_constant_offset_on_straight():
    ref = densify([(0, 0), (10, 0)])
    path = np.c_[np.linspace(1, 9, 50), np.full(50, 0.1)]
    assert total_error(path, ref) == pytest.approx(0.1, abs=1e-12)


def test_segment_projection_not_vertex_only():
    ref = np.array([[0.0, 0.0], [10.0, 0.0]])
    assert total_error(np.array([[5.0, 1.0]]), ref) == pytest.approx(1.0)


def test_matches_brute_force_on_random_pairs():
    rng = np.random.default_rng(123)
    for _ in range(100):
        ref = np.cumsum(rng.normal(size=(rng.integers(2, 40), 2)), axis=0)
        path = ref[rng.integers(0, len(ref), 30)] + rng.normal(scale=0.5, size=(30, 2))
        assert total_error(path, ref) == pytest.approx(brute_force_total(path, ref), abs=1e-9)


@settings(max_examples=50)
@given(st.floats(-100, 100), st.floats(-100, 100))
def test_total_error_translation_invariant(dx, dy):
    rng = np.random.default_rng(0)
    ref = np.cumsum(rng.normal(size=(20, 2)), axis=0)
    path = ref + rng.normal(scale=0.3, size=ref.shape)
    shift = np.array([dx, dy])
    assert total_error(path + shift, ref + shift) == pytest.approx(total_error(path, ref), abs=1e-9)


def test_rmse_examples():
    t = np.arange(5.0)
    assert axis_rmse(t, t) == 0.0
    assert axis_rmse(t + 0.5, t) == pytest.approx(0.5)
    assert axis_rmse([0.0, 1.0], [0.0, 0.0]) == pytest.approx(math.sqrt(0.5))
    with pytest.raises(ValueError):
        axis_rmse([1.0, 2.0], [1.0])
    with pytest.raises(EmptyPathError):
        axis_rmse([], [])


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=50), st.floats(-5, 5))
def test_rmse_bounds_mean_error_and_is_shift_invariant(err, shift):
    e = np.array(err)
    truth = np.zeros_like(e)
    r = axis_rmse(e, truth)
    assert r >= abs(e.mean()) - 1e-12
    assert axis_rmse(e + shift, truth + shift) == pytest.approx(r, abs=1e-9)


def test_error_report_columns():
    ref = densify([(0, 0), (10, 0)])
    truth = np.c_[np.linspace(0, 10, 11), np.zeros(11)]
    est = truth + [0.5, 0.0]
    rep = error_report(truth, est, ref)
    assert rep.total == 0.0
    assert rep.x_kalman == pytest.approx(0.5) and rep.y_kalman == 0.0


def test_densify_keeps_vertices_and_spacing():
    pts = [(0, 0), (1, 0), (1, 2.05)]
    d = densify(pts, 0.1)
    assert np.max(np.linalg.norm(np.diff(d, axis=0), axis=1)) <= 0.1 + 1e-12
    for p in pts:
        assert np.min(np.linalg.norm(d - p, axis=1)) < 1e-12


def _headings(course):
    w = np.array([(p.x, p.y) for p in course.waypoints])
    d = np.diff(w, axis=0)
    return np.unwrap(np.arctan2(d[:, 1], d[:, 0]))


def test_be1_starts_straight():
    w = builtin_course("BE1").waypoints
    first = np.array([(p.x, p.y) for p in w[:5]])
    assert np.allclose(first[:, 1], 0.0)
    assert np.all(np.diff(first[:, 0]) > 0)


def test_be1_has_sharp_corner():
    turns = np.abs(np.degrees(np.diff(_headings(builtin_course("BE1")))))
    assert turns.max() == pytest.approx(120.0, abs=1e-3)


def test_be2_alternates_curvature():
    turns = np.diff(_headings(builtin_course("BE2")))
    signs = np.sign(turns[np.abs(turns) > 1e-9])
    assert np.count_nonzero(np.diff(signs)) >= 2


def test_be3_is_u_shaped():
    h = _headings(builtin_course("BE3"))
    assert abs(abs(h[-1] - h[0]) - math.pi) < math.radians(5)


def test_all_courses_at_constant_depth():
    for cid in BUILTIN_COURSES:
        assert {p.z for p in builtin_course(cid).waypoints} == {20.0}


@pytest.mark.parametrize("cid", BUILTIN_COURSES)
def test_shipped_files_match_generator(cid):
    assert builtin_course(cid).waypoints == tuple(generate_course_waypoints(cid))
    assert parse_course_csv(course_csv_text(cid)).waypoints == builtin_course(cid).waypoints


def test_course_file_round_trip(tmp_path):
    wps = [Waypoint(0, 0, 5), Waypoint(3, 4, 5), Waypoint(6, 0, 5)]
    p = tmp_path / "zig.csv"
    with open(p, "w") as fh:
        write_course_csv("zig", wps, fh)
    c = load_course(p)
    assert c.name == "zig" and list(c.waypoints) == wps


def test_course_errors():
    with pytest.raises(UnknownCourseError):
        builtin_course("BE9")
    with pytest.raises(ValueError):
        parse_course_csv("a,b\n1,2\n")
    with pytest.raises(ValueError):
        Course.from_waypoints("one", [Waypoint(0, 0)])
