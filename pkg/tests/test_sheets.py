from varifold_atlas.arrangement import INSIDE_BOTH
from varifold_atlas.sheets import (
    BOTTOM,
    BOUNDARY,
    HELICOIDAL_BAND,
    ONLY,
    SMOOTH_CONTINUATION,
    TOP,
    build_complex,
    cw_euler_characteristic,
    genus_and_boundaries,
)
from varifold_atlas.varifolds import compute_stats, enumerate_varifolds

from _fixtures import (
    CHAIN,
    DISJOINT,
    LENS,
    NESTED,
    SINGLE_CIRCLE,
    SQUARES,
    build_all,
    random_pair_config,
)


def lens_complexes():
    cs, arr = build_all(LENS)
    vs = enumerate_varifolds(arr)
    lens_face = next(f for f in arr.bounded_faces if f.region_class == INSIDE_BOTH)
    v0 = next(v for v in vs if v.m(lens_face.id) == 0)
    v2 = next(v for v in vs if v.m(lens_face.id) == 2)
    return arr, lens_face, build_complex(arr, v0), build_complex(arr, v2)


def test_lens_zero_complex_structure():
    arr, lens_face, c0, c2 = lens_complexes()
    assert len(c0.sheets) == 2
    assert all(s.layer == ONLY for s in c0.sheets)
    bands = [s for s in c0.seams if s.kind == HELICOIDAL_BAND]
    assert len(bands) == 2
    assert c0.n_components == 1


def test_lens_two_complex_structure():
    arr, lens_face, c0, c2 = lens_complexes()
    layers = sorted(s.layer for s in c2.sheets)
    assert layers == sorted([ONLY, ONLY, TOP, BOTTOM])
    assert not [s for s in c2.seams if s.kind == HELICOIDAL_BAND]
    smooth = [s for s in c2.seams if s.kind == SMOOTH_CONTINUATION]
    assert len(smooth) == 2
    assert c2.n_components == 2


def test_seam_layer_conventions():
    arr, lens_face, c0, c2 = lens_complexes()
    for s in c2.seams:
        e = next((e for e in arr.edges if e.id == s.ref), None)
        if e is None or lens_face.id not in e.faces():
            continue
        layers = {sk[1] for sk in s.sheets if sk[0] == lens_face.id}
        if s.kind == SMOOTH_CONTINUATION:
            assert layers == ({TOP} if e.family == "A" else {BOTTOM})
        elif s.kind == BOUNDARY:
            assert layers == ({BOTTOM} if e.family == "A" else {TOP})


def test_disjoint_complex():
    cs, arr = build_all(DISJOINT)
    vs = enumerate_varifolds(arr)
    c = build_complex(arr, vs[0])
    assert len(c.sheets) == 2 and not c.seams or \
        all(s.kind == BOUNDARY for s in c.seams)
    assert c.n_components == 2


def test_cw_euler_characteristic_values():
    arr, lens_face, c0, c2 = lens_complexes()
    assert cw_euler_characteristic(c0) == 0
    assert cw_euler_characteristic(c2) == 2
    cs, arr1 = build_all(SINGLE_CIRCLE)
    c1 = build_complex(arr1, enumerate_varifolds(arr1)[0])
    assert cw_euler_characteristic(c1) == 1


def test_genus_and_boundaries_lens():
    arr, lens_face, c0, c2 = lens_complexes()
    recs0 = genus_and_boundaries(c0)
    assert recs0 == [{"component": 0, "chi": 0, "boundary_loops": 2, "genus": 0}]
    recs2 = sorted(genus_and_boundaries(c2), key=lambda r: r["component"])
    assert all(r["chi"] == 1 and r["boundary_loops"] == 1 and r["genus"] == 0
               for r in recs2)


def test_chi_oracle_equality_across_configs():
    for name, doc in (("lens", LENS), ("disjoint", DISJOINT), ("squares", SQUARES),
                      ("nested", NESTED), ("chain", CHAIN)):
        cs, arr = build_all(doc)
        for v in enumerate_varifolds(arr):
            c = build_complex(arr, v)
            assert compute_stats(v).chi == cw_euler_characteristic(c), (name, v.vector())


def test_boundary_loops_total_equals_curve_count():
    for doc in (LENS, DISJOINT, SQUARES, NESTED, CHAIN):
        cs, arr = build_all(doc)
        for v in enumerate_varifolds(arr):
            recs = genus_and_boundaries(build_complex(arr, v))
            assert sum(r["boundary_loops"] for r in recs) == len(cs.curves)


def test_genus_nonnegative_integer_random():
    for seed in range(8):
        cs, arr = build_all(random_pair_config(seed))
        for v in enumerate_varifolds(arr):
            for r in genus_and_boundaries(build_complex(arr, v)):
                assert r["genus"] >= 0


def test_squares_all_zero_varifold_topology():
    cs, arr = build_all(SQUARES)
    vs = enumerate_varifolds(arr)
    v0 = vs[0]  # canonical order puts the all-zero assignment first
    assert all(v0.m(f.id) != 2 for f in arr.faces)
    c = build_complex(arr, v0)
    assert len(c.bands) == 8
    recs = genus_and_boundaries(c)
    assert sum(r["boundary_loops"] for r in recs) == 2
    assert compute_stats(v0).chi == cw_euler_characteristic(c)
