import json

import numpy as np
import pytest

from varifold_atlas.curves import load_curve_set
from varifold_atlas.errors import GeometryError, InputError

from _fixtures import LENS, TRIANGLE


def test_two_circles_load():
    cs = load_curve_set(LENS)
    assert len(cs.curves) == 2
    assert {c.family for c in cs.curves} == {"A", "B"}
    assert all(c.n == 256 for c in cs.curves)


def test_triangle_minimal_closed_polyline():
    cs = load_curve_set(TRIANGLE)
    assert len(cs.curves) == 1
    assert cs.curves[0].n == 3


def test_intra_family_intersection_rejected():
    doc = {
        "curves_a": [{"circle": {"center": [0, 0], "r": 1.0, "samples": 64}},
                     {"circle": {"center": [1, 0], "r": 1.0, "samples": 64}}],
        "curves_b": [],
    }
    with pytest.raises(GeometryError, match="intra-family"):
        load_curve_set(doc)


def test_open_polyline_rejected():
    doc = {"curves_a": [{"points": [[0, 0], [1, 0]]}], "curves_b": []}
    with pytest.raises(InputError, match="open polyline"):
        load_curve_set(doc)


def test_self_intersecting_rejected():
    th = 4 * np.pi * np.arange(5) / 5
    pentagram = np.column_stack([np.cos(th), np.sin(th)]).tolist()
    with pytest.raises(GeometryError, match="self-intersecting"):
        load_curve_set({"curves_a": [{"points": pentagram}], "curves_b": []})


def test_orientation_normalized_ccw():
    cw = [[0, 0], [0, 1], [1, 1], [1, 0]]
    cs = load_curve_set({"curves_a": [{"points": cw}], "curves_b": []})
    from varifold_atlas.geom import signed_area

    assert signed_area(cs.curves[0].points) > 0


def test_closing_point_dropped():
    sq = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]
    cs = load_curve_set({"curves_a": [{"points": sq}], "curves_b": []})
    assert cs.curves[0].n == 4


def test_malformed_document():
    with pytest.raises(InputError):
        load_curve_set("{not json")
    with pytest.raises(InputError):
        load_curve_set({"curves_a": [{"circle": {"center": [0, 0]}}]})
    with pytest.raises(InputError):
        load_curve_set({"curves_a": [], "curves_b": []})
    with pytest.raises(InputError):
        load_curve_set({"curves_a": [{"points": [[0, 0], [1, 0], [1, 1]],
                                      "circle": {"center": [0, 0], "r": 1}}]})


def test_json_string_and_ids():
    cs = load_curve_set(json.dumps(LENS))
    assert [c.id for c in cs.curves] == ["a0", "b0"]
    doc = {"curves_a": [{"id": "ring", "circle": {"center": [0, 0], "r": 1, "samples": 32}}],
           "curves_b": []}
    assert load_curve_set(doc).curves[0].id == "ring"


def test_degenerate_zero_area():
    line = [[0, 0], [1, 0], [2, 0]]
    with pytest.raises(InputError):
        load_curve_set({"curves_a": [{"points": line}], "curves_b": []})


def test_diameter_and_eps():
    cs = load_curve_set(LENS)
    assert abs(cs.diameter - np.hypot(3, 2)) < 1e-9
    assert cs.eps_geo == cs.tolerances.eps_geo_factor * cs.diameter
