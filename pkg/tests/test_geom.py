import numpy as np

from varifold_atlas import geom


def test_segment_intersections_basic():
    a0 = np.array([[0.0, 0.0]])
    a1 = np.array([[1.0, 0.0]])
    b0 = np.array([[0.5, -1.0]])
    b1 = np.array([[0.5, 1.0]])
    ia, ib, s, u, pts = geom.segment_pair_intersections(a0, a1, b0, b1)
    assert len(ia) == 1
    assert np.allclose(pts[0], [0.5, 0.0])
    assert abs(s[0] - 0.5) < 1e-12 and abs(u[0] - 0.5) < 1e-12


def test_segment_intersections_half_open_vertex():
    # crossing exactly at a shared polyline vertex is reported once
    a0 = np.array([[0.0, 0.0], [1.0, 0.0]])
    a1 = np.array([[1.0, 0.0], [2.0, 0.0]])
    b0 = np.array([[1.0, -1.0]])
    b1 = np.array([[1.0, 1.0]])
    ia, ib, s, u, pts = geom.segment_pair_intersections(a0, a1, b0, b1)
    assert len(ia) == 1
    assert ia[0] == 1 and s[0] == 0.0


def test_parallel_segments_no_hit():
    a0 = np.array([[0.0, 0.0]])
    a1 = np.array([[1.0, 0.0]])
    b0 = np.array([[0.0, 0.5]])
    b1 = np.array([[1.0, 0.5]])
    ia, *_ = geom.segment_pair_intersections(a0, a1, b0, b1)
    assert len(ia) == 0


def test_segment_distance():
    assert geom.segment_distance([0, 0], [1, 0], [0.5, -1], [0.5, 1]) == 0.0
    d = geom.segment_distance([0, 0], [1, 0], [0, 1], [1, 1])
    assert abs(d - 1.0) < 1e-12
    d = geom.segment_distance([0, 0], [1, 0], [2, 1], [3, 1])
    assert abs(d - np.sqrt(2)) < 1e-12


def test_crossing_angle_range():
    assert abs(geom.crossing_angle([1, 0], [0, 1]) - np.pi / 2) < 1e-12
    assert abs(geom.crossing_angle([1, 0], [-1, 1e-3]) - np.pi) < 2e-3
    assert geom.crossing_angle([1, 0], [1, 1e-4]) < 1e-3


def test_point_in_polyline_vs_winding_oracle():
    rng = np.random.RandomState(7)
    for _ in range(40):
        n = rng.randint(3, 12)
        th = np.sort(rng.uniform(0, 2 * np.pi, n))
        r = rng.uniform(0.5, 1.5, n)
        poly = np.column_stack([r * np.cos(th), r * np.sin(th)])
        pt = rng.uniform(-2, 2, 2)
        crossing = geom.point_in_polyline(pt, poly)
        winding = geom.winding_number(pt, poly) != 0
        assert crossing == winding


def test_signed_area_orientation():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    assert abs(geom.signed_area(sq) - 1.0) < 1e-12
    assert abs(geom.signed_area(sq[::-1]) + 1.0) < 1e-12


def test_resample_polyline():
    pts = np.array([[0, 0], [1, 0], [1, 1]], float)
    out = geom.resample_polyline(pts, 0.25)
    assert np.allclose(out[0], pts[0]) and np.allclose(out[-1], pts[-1])
    seg = np.linalg.norm(np.diff(out, axis=0), axis=1)
    assert seg.max() <= 0.25 + 1e-12
    # resampled points stay on the polyline
    for p in out:
        d = min(geom.segment_distance(p, p, pts[i], pts[i + 1]) for i in range(2))
        assert d < 1e-12


def test_circle_and_ellipse_sampling():
    c = geom.circle_points((1, 2), 0.5, 64)
    assert len(c) == 64
    assert geom.signed_area(c) > 0
    assert np.allclose(np.linalg.norm(c - [1, 2], axis=1), 0.5)
    e = geom.ellipse_points((0, 0), 2.0, 1.0, 64, rotation=np.pi / 2)
    # rotated by 90 degrees: extents swap
    assert abs(e[:, 1].max() - 2.0) < 1e-9
    assert abs(e[:, 0].max() - 1.0) < 1e-9


def test_segment_circle_exit():
    t = geom.segment_circle_exit([0, 0], [2, 0], [0, 0], 1.0)
    assert abs(t - 0.5) < 1e-12
    assert geom.segment_circle_exit([0, 0], [0.5, 0], [0, 0], 1.0) is None
