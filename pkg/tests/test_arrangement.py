import numpy as np
import pytest

from varifold_atlas import geom
from varifold_atlas.arrangement import (
    A_ONLY,
    B_ONLY,
    INSIDE_BOTH,
    MINUS,
    OUTSIDE_BOTH,
    PLUS,
    assign_signs,
    build,
    build_arrangement,
    compute_crossings,
)
from varifold_atlas.curves import load_curve_set
from varifold_atlas.errors import TangencyError

from _fixtures import (
    CIRCLE_ELLIPSE,
    DISJOINT,
    LENS,
    NESTED,
    SINGLE_CIRCLE,
    SQUARES,
    build_all,
    random_pair_config,
)


def circle_circle_intersections(c1, r1, c2, r2):
    """Closed-form intersection points of two circles (test oracle)."""
    c1 = np.asarray(c1, float)
    c2 = np.asarray(c2, float)
    d = np.linalg.norm(c2 - c1)
    a = (r1 ** 2 - r2 ** 2 + d ** 2) / (2 * d)
    hh = np.sqrt(r1 ** 2 - a ** 2)
    mid = c1 + a * (c2 - c1) / d
    perp = np.array([-(c2 - c1)[1], (c2 - c1)[0]]) / d
    return mid + hh * perp, mid - hh * perp


def test_lens_crossings_vs_closed_form():
    cs = load_curve_set(LENS)
    crossings = compute_crossings(cs)
    assert len(crossings) == 2
    p1, p2 = circle_circle_intersections((0, 0), 1.0, (1, 0), 1.0)
    got = sorted([tuple(c.position) for c in crossings], key=lambda p: -p[1])
    want = sorted([tuple(p1), tuple(p2)], key=lambda p: -p[1])
    # 256-gon sampling error is about (2 pi / 256)^2 / 8
    for g, w in zip(got, want):
        assert np.linalg.norm(np.array(g) - np.array(w)) < 2e-3
    # crossing angle of two unit circles at distance 1 is 60 degrees
    for c in crossings:
        assert abs(c.angle - np.pi / 3) < 0.02


def test_disjoint_circles_no_crossings():
    cs = load_curve_set(DISJOINT)
    assert compute_crossings(cs) == []


def test_tangent_circles_rejected():
    doc = {
        "curves_a": [{"circle": {"center": [0, 0], "r": 1.0, "samples": 256}}],
        "curves_b": [{"circle": {"center": [0.5, 0], "r": 0.5, "samples": 256}}],
    }
    with pytest.raises(TangencyError, match="tangential contact"):
        compute_crossings(load_curve_set(doc))


def test_low_angle_crossing_rejected():
    # two long slivers crossing at ~2e-4 rad
    a = [[-1, 0], [1, 0], [1, 0.5], [-1, 0.5]]
    b = [[-1, -1e-4], [1, 1e-4], [1, -0.5], [-1, -0.5]]
    doc = {"curves_a": [{"points": a}], "curves_b": [{"points": b}]}
    with pytest.raises(TangencyError):
        compute_crossings(load_curve_set(doc))


def test_lens_subdivision_counts():
    cs, arr = build_all(LENS)
    assert (len(arr.nodes), len(arr.edges), len(arr.faces)) == (2, 4, 4)


def test_single_circle_synthetic_vertex():
    cs, arr = build_all(SINGLE_CIRCLE)
    assert (len(arr.nodes), len(arr.edges), len(arr.faces)) == (1, 1, 2)
    assert len(arr.synthetic_vertices) == 1


def test_squares_face_trace():
    cs, arr = build_all(SQUARES)
    assert (len(arr.nodes), len(arr.edges), len(arr.faces)) == (8, 16, 10)


def test_lens_signs_winding_oracle():
    cs, arr = build_all(LENS)
    unb = arr.unbounded_face
    assert unb.sign == MINUS and not unb.containment
    by_region = {f.region_class: f for f in arr.bounded_faces}
    assert by_region[INSIDE_BOTH].sign == MINUS
    assert by_region[A_ONLY].sign == PLUS
    assert by_region[B_ONLY].sign == PLUS
    # independent winding-number oracle at the representative points
    for f in arr.bounded_faces:
        winding_count = sum(
            abs(geom.winding_number(f.rep_point, c.points)) for c in cs.curves
        )
        assert (winding_count % 2 == 0) == (f.sign == MINUS)
        assert winding_count == len(f.containment)


def test_nested_region_classes():
    cs, arr = build_all(NESTED)
    classes = sorted(f.region_class for f in arr.bounded_faces)
    assert A_ONLY in classes and INSIDE_BOTH in classes


def test_checkerboard_and_euler_on_random_configs():
    for seed in range(8):
        cs, arr = build_all(random_pair_config(seed))
        for e in arr.edges:
            assert arr.face(e.left_face).sign != arr.face(e.right_face).sign
        for cid, sector in arr.crossing_sectors.items():
            signs = [arr.face(fid).sign for fid in sector]
            assert all(signs[i] != signs[(i + 1) % 4] for i in range(4))
        # every crossing has 4 incident edges (rays)
        for cid, rays in arr.crossing_rays.items():
            assert len(rays) == 4


def test_face_areas_sum():
    cs, arr = build_all(LENS)
    # areas: two lunes plus lens equals the union area of the two disks
    lens = next(f for f in arr.bounded_faces if f.region_class == INSIDE_BOTH)
    lunes = [f for f in arr.bounded_faces if f.region_class in (A_ONLY, B_ONLY)]
    r, d = 1.0, 1.0
    lens_area = 2 * r * r * np.arccos(d / (2 * r)) - 0.5 * d * np.sqrt(4 * r * r - d * d)
    assert abs(lens.area - lens_area) < 5e-3
    disk = np.pi * r * r
    for lune in lunes:
        assert abs(lune.area - (disk - lens_area)) < 6e-3


def test_reordered_curves_isomorphic():
    doc = {
        "curves_a": [{"circle": {"center": [0, 0], "r": 1.0, "samples": 200}}],
        "curves_b": [{"circle": {"center": [1, 0], "r": 0.9, "samples": 220}},
                     {"circle": {"center": [-1.4, 0], "r": 0.3, "samples": 64}}],
    }
    doc_swapped = {
        "curves_a": doc["curves_a"],
        "curves_b": list(reversed(doc["curves_b"])),
    }
    _, arr1 = build_all(doc)
    _, arr2 = build_all(doc_swapped)

    def signature(arr):
        faces = sorted(
            (round(f.area, 9) if f.area is not None else -1.0, f.sign, f.region_class)
            for f in arr.faces
        )
        adj = arr.adjacency()
        degree = sorted(len(adj[f.id]) for f in arr.faces)
        return faces, degree

    assert signature(arr1) == signature(arr2)


def test_circle_ellipse_counts():
    cs, arr = build_all(CIRCLE_ELLIPSE)
    assert len(arr.crossings) == 4
    assert len(arr.faces) == 6
