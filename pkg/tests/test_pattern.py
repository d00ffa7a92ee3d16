import numpy as np
import pytest
from hypothesis import given, strategies as st

from gibbscl.pattern import (
    BucketIndex, GeometryError, ObservationWindow, PointPattern, erode_window,
    neighbor_count, restrict_pattern,
)


def brute_count(u, pts, r, skip=-1):
    d = np.hypot(pts[:, 0] - u[0], pts[:, 1] - u[1])
    ok = d <= r
    if skip >= 0:
        ok[skip] = False
    return int(ok.sum())


def test_erode_window_examples():
    d = erode_window(ObservationWindow(0, 1000, 0, 500), 9.25)
    assert d.bounds == (9.25, 990.75, 9.25, 490.75)
    assert d.area == 981.5 * 481.5
    w = ObservationWindow(0, 10, 0, 10)
    assert erode_window(w, 0).bounds == w.bounds
    with pytest.raises(GeometryError):
        erode_window(w, 5)
    with pytest.raises(GeometryError):
        erode_window(w, -1)


def test_window_validation():
    with pytest.raises(GeometryError):
        ObservationWindow(1, 1, 0, 2)
    with pytest.raises(GeometryError):
        ObservationWindow(0, np.inf, 0, 2)


def test_neighbor_count_examples():
    w = ObservationWindow(-50, 50, -50, 50)
    assert neighbor_count((0, 1), PointPattern(np.zeros((0, 2)), w), 9.25) == 0
    pat = PointPattern([(0, 0), (5, 0), (20, 0)], w)
    assert neighbor_count((0, 1), pat, 9.25) == 2
    assert neighbor_count((0, 0), pat, 9.25, exclude=(0, 0)) == 1


def test_neighbor_count_boundary_distance_is_inclusive():
    w = ObservationWindow(0, 10, 0, 10)
    pat = PointPattern([(3.0, 5.0)], w)
    assert neighbor_count((5.0, 5.0), pat, 2.0) == 1


def test_restrict_pattern_examples():
    w = ObservationWindow(0, 20, 0, 20)
    pat = PointPattern([(1, 1), (11, 1)], w)
    out = restrict_pattern(pat, ObservationWindow(0, 10, 0, 10))
    np.testing.assert_array_equal(out.points, [[1, 1]])
    assert len(restrict_pattern(PointPattern(np.zeros((0, 2)), w), w)) == 0
    np.testing.assert_array_equal(restrict_pattern(pat, w).points, pat.points)


def test_pattern_validation(tmp_path):
    w = ObservationWindow(0, 1, 0, 1)
    with pytest.raises(GeometryError):
        PointPattern([(0.5, 0.5), (0.5, 0.5)], w)
    with pytest.raises(GeometryError):
        PointPattern([(2, 0.5)], w)
    pat = PointPattern([(0.1, 0.2), (0.3, 0.4)], w)
    pat.to_csv(tmp_path / "p.csv")
    back = PointPattern.from_csv(tmp_path / "p.csv", w)
    np.testing.assert_array_equal(back.points, pat.points)


def test_bucket_index_matches_brute_force_on_many_patterns(rng):
    w = ObservationWindow(0, 100, 0, 60)
    for _ in range(1000):
        n = rng.integers(0, 40)
        pts = np.column_stack([rng.uniform(0, 100, n), rng.uniform(0, 60, n)])
        r = rng.uniform(0.5, 20)
        idx = BucketIndex(pts, w, r)
        q = np.column_stack([rng.uniform(-5, 105, 5), rng.uniform(-5, 65, 5)])
        got = idx.count(q, r)
        want = [brute_count(u, pts, r) for u in q]
        assert list(got) == want


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), max_size=30, unique=True),
       st.floats(0, 4.9))
def test_restrict_idempotent_and_erosion_area(pts, r):
    w = ObservationWindow(0, 10, 0, 10)
    pat = PointPattern(np.array(pts, float).reshape(-1, 2), w)
    d = erode_window(w, r)
    once = restrict_pattern(pat, d)
    twice = restrict_pattern(once, d)
    np.testing.assert_array_equal(once.points, twice.points)
    assert d.area == (w.width - 2 * r) * (w.height - 2 * r)
