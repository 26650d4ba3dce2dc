"""Planar subdivision induced by Z = A + B.

Crossings between the two families split every curve into arcs; arcs carry
two half-edges each; faces are orbits of the half-edge `next` permutation
with interior on the left.  Crossing-free curves get one synthetic vertex
so the subdivision stays a valid CW complex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Point, Polygon

from . import geom
from .curves import CurveSet
from .errors import ConsistencyError, GeometryError, TangencyError

PLUS = "PLUS"
MINUS = "MINUS"

INSIDE_BOTH = "INSIDE_BOTH"
OUTSIDE_BOTH = "OUTSIDE_BOTH"
A_ONLY = "A_ONLY"
B_ONLY = "B_ONLY"


@dataclass(frozen=True)
class CrossingPoint:
    id: str
    position: np.ndarray
    curve_a: str
    curve_b: str
    angle: float          # crossing angle in (0, pi)
    param_a: float        # arc-length parameter along curve_a
    param_b: float


@dataclass
class ArrEdge:
    """Arc of one curve between consecutive crossings along it."""

    id: str
    curve_id: str
    family: str
    source: str           # node id (crossing or synthetic)
    target: str
    points: np.ndarray = field(repr=False)   # polyline source -> target
    left_face: str | None = None              # face of the forward half-edge
    right_face: str | None = None

    def faces(self) -> tuple[str, str]:
        return self.left_face, self.right_face

    def length(self) -> float:
        return float(geom.arc_lengths(self.points, closed=False)[-1])


@dataclass
class ArrangementFace:
    id: str
    boundary_loops: list[list[int]]           # lists of half-edge indices
    is_unbounded: bool
    area: float | None = None                 # None for the unbounded face
    sign: str | None = None
    containment: frozenset = frozenset()
    region_class: str | None = None
    rep_point: np.ndarray | None = None


class Arrangement:
    def __init__(self, curves: CurveSet, crossings: list[CrossingPoint]):
        self.curves = curves
        self.crossings = crossings
        self.nodes: dict[str, np.ndarray] = {}
        self.synthetic_vertices: set[str] = set()
        self.edges: list[ArrEdge] = []
        self.faces: list[ArrangementFace] = []
        self.half_next: list[int] = []
        self.half_face: list[str] = []
        # four sector faces at each crossing, CCW order
        self.crossing_sectors: dict[str, list[str]] = {}
        # outgoing half-edges (rays) at each crossing, CCW order; sector i
        # lies between ray i and ray i+1
        self.crossing_rays: dict[str, list[int]] = {}
        self._face_by_id: dict[str, ArrangementFace] = {}

    # half-edge 2*i traverses edge i forward, 2*i+1 in reverse
    def he_edge(self, he: int) -> ArrEdge:
        return self.edges[he // 2]

    def he_forward(self, he: int) -> bool:
        return he % 2 == 0

    def he_points(self, he: int) -> np.ndarray:
        pts = self.edges[he // 2].points
        return pts if he % 2 == 0 else pts[::-1]

    def he_origin(self, he: int) -> str:
        e = self.edges[he // 2]
        return e.source if he % 2 == 0 else e.target

    def he_head(self, he: int) -> str:
        e = self.edges[he // 2]
        return e.target if he % 2 == 0 else e.source

    def face(self, fid: str) -> ArrangementFace:
        return self._face_by_id[fid]

    @property
    def bounded_faces(self) -> list[ArrangementFace]:
        return [f for f in self.faces if not f.is_unbounded]

    @property
    def unbounded_face(self) -> ArrangementFace:
        return next(f for f in self.faces if f.is_unbounded)

    def loop_points(self, loop: list[int]) -> np.ndarray:
        """Concatenated polyline of a boundary loop (closed, no repeat)."""
        return np.vstack([self.he_points(he)[:-1] for he in loop])

    def face_polygon(self, face: ArrangementFace) -> tuple[np.ndarray, list[np.ndarray]]:
        loops = [self.loop_points(lp) for lp in face.boundary_loops]
        if face.is_unbounded:
            return np.zeros((0, 2)), loops
        outer = max(loops, key=lambda p: geom.signed_area(p))
        holes = [p for p in loops if p is not outer]
        return outer, holes

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {f.id: set() for f in self.faces}
        for e in self.edges:
            adj[e.left_face].add(e.right_face)
            adj[e.right_face].add(e.left_face)
        return adj


def compute_crossings(curves: CurveSet) -> list[CrossingPoint]:
    """All transversal A x B intersections, canonically ordered."""
    tol = curves.tolerances
    eps = curves.eps_geo
    found = []  # (a_id, b_id, pos, angle, pa, pb)
    for ca in curves.family("A"):
        a0, a1 = geom.polyline_segments(ca.points, closed=True)
        cum_a = ca.arc_lengths()
        len_a = np.linalg.norm(a1 - a0, axis=1)
        for cb in curves.family("B"):
            b0, b1 = geom.polyline_segments(cb.points, closed=True)
            cum_b = cb.arc_lengths()
            len_b = np.linalg.norm(b1 - b0, axis=1)
            ia, ib, s, u, pts = geom.segment_pair_intersections(a0, a1, b0, b1)
            for k in range(len(ia)):
                ang = geom.crossing_angle(a1[ia[k]] - a0[ia[k]], b1[ib[k]] - b0[ib[k]])
                if not (tol.theta_min <= ang <= np.pi - tol.theta_min):
                    raise TangencyError(
                        f"tangential contact: curves {ca.id} and {cb.id} cross at "
                        f"angle {ang:.2e} rad outside the transversality band"
                    )
                pa = float(cum_a[ia[k]] + s[k] * len_a[ia[k]])
                pb = float(cum_b[ib[k]] + u[k] * len_b[ib[k]])
                found.append((ca.id, cb.id, pts[k], ang, pa, pb))
            _check_tangency(ca, cb, a0, a1, b0, b1, ia, ib, eps)

    if len(found) > tol.max_crossings:
        raise GeometryError(
            f"{len(found)} crossings exceed the configured maximum {tol.max_crossings}"
        )
    found.sort(key=lambda r: (r[0], r[4], r[1], r[5]))
    crossings = [
        CrossingPoint(
            id=f"c{i}", position=np.asarray(r[2], float), curve_a=r[0], curve_b=r[1],
            angle=r[3], param_a=r[4], param_b=r[5],
        )
        for i, r in enumerate(found)
    ]
    for i in range(len(crossings)):
        for j in range(i + 1, len(crossings)):
            d = float(np.linalg.norm(crossings[i].position - crossings[j].position))
            if d < eps:
                raise GeometryError(
                    f"near-degenerate configuration: crossings {crossings[i].id} and "
                    f"{crossings[j].id} are {d:.2e} apart (< eps_geo {eps:.2e})"
                )
    return crossings


def _check_tangency(ca, cb, a0, a1, b0, b1, hit_ia, hit_ib, eps):
    """Segment pairs that come within eps of each other without a proper
    crossing nearby indicate tangential contact."""
    hits = list(zip(hit_ia.tolist(), hit_ib.tolist()))
    na, nb = len(a0), len(b0)
    lo1 = np.minimum(a0, a1) - eps
    hi1 = np.maximum(a0, a1) + eps
    lo2 = np.minimum(b0, b1)
    hi2 = np.maximum(b0, b1)
    overlap = (
        (lo1[:, None, 0] <= hi2[None, :, 0]) & (lo2[None, :, 0] <= hi1[:, None, 0])
        & (lo1[:, None, 1] <= hi2[None, :, 1]) & (lo2[None, :, 1] <= hi1[:, None, 1])
    )
    ci, cj = np.nonzero(overlap)
    for i, j in zip(ci.tolist(), cj.tolist()):
        near_hit = any(
            min((i - bi) % na, (bi - i) % na) <= 2
            and min((j - bj) % nb, (bj - j) % nb) <= 2
            for bi, bj in hits
        )
        if near_hit:
            continue
        if geom.segment_distance(a0[i], a1[i], b0[j], b1[j]) < eps:
            raise TangencyError(
                f"tangential contact: curves {ca.id} and {cb.id} pass within "
                f"eps_geo of each other without a transversal crossing"
            )


def _curve_events(curve, crossings):
    events = []
    for c in crossings:
        if c.curve_a == curve.id:
            events.append((c.param_a, c.id, c.position))
        elif c.curve_b == curve.id:
            events.append((c.param_b, c.id, c.position))
    events.sort(key=lambda t: t[0])
    return events


def _arc_points(curve, cum, pa, pos_a, pb, pos_b, eps):
    """Sub-polyline of the closed curve from parameter pa to pb (forward,
    wrapping at the perimeter)."""
    total = float(cum[-1])
    n = curve.n
    if pb <= pa + 1e-12 * total:
        pb += total
    pts = [np.asarray(pos_a, float)]
    k = int(np.searchsorted(cum[:n], pa, side="right"))
    while k < 3 * n:
        param = cum[k % n] + total * (k // n)
        if param >= pb - 1e-12 * total:
            break
        p = curve.points[k % n]
        if (np.linalg.norm(p - pts[-1]) > eps
                and np.linalg.norm(p - pos_b) > eps):
            pts.append(p)
        k += 1
    pts.append(np.asarray(pos_b, float))
    return np.array(pts)


def build_arrangement(curves: CurveSet, crossings: list[CrossingPoint]) -> Arrangement:
    """Construct the half-edge subdivision and trace its faces."""
    arr = Arrangement(curves, crossings)
    eps = curves.eps_geo
    for c in crossings:
        arr.nodes[c.id] = c.position

    for curve in curves.curves:
        events = _curve_events(curve, crossings)
        cum = curve.arc_lengths()
        if not events:
            nid = f"s_{curve.id}"
            arr.nodes[nid] = curve.points[0].copy()
            arr.synthetic_vertices.add(nid)
            events = [(0.0, nid, curve.points[0])]
        m = len(events)
        for i in range(m):
            pa, na_, posa = events[i]
            pb, nb_, posb = events[(i + 1) % m]
            pts = _arc_points(curve, cum, pa, posa, pb, posb, eps)
            if len(pts) < 2 or geom.arc_lengths(pts, closed=False)[-1] <= eps:
                raise GeometryError(
                    f"degenerate arc on curve {curve.id} between {na_} and {nb_}"
                )
            arr.edges.append(
                ArrEdge(
                    id=f"e{len(arr.edges)}", curve_id=curve.id, family=curve.family,
                    source=na_, target=nb_, points=pts,
                )
            )

    _trace_faces(arr)
    _verify_subdivision(arr)
    return arr


def _outgoing_direction(arr: Arrangement, he: int) -> float:
    pts = arr.he_points(he)
    d = pts[1] - pts[0]
    return float(np.arctan2(d[1], d[0]))


def _trace_faces(arr: Arrangement) -> None:
    n_half = 2 * len(arr.edges)
    out_at: dict[str, list[int]] = {nid: [] for nid in arr.nodes}
    in_at: dict[str, list[int]] = {nid: [] for nid in arr.nodes}
    for he in range(n_half):
        out_at[arr.he_origin(he)].append(he)
        in_at[arr.he_head(he)].append(he)

    nxt = [-1] * n_half
    ccw_order: dict[str, list[int]] = {}
    for nid, hes in out_at.items():
        if not hes:
            raise ConsistencyError(f"isolated node {nid}")
        angles = np.array([_outgoing_direction(arr, he) for he in hes])
        idx = np.argsort(angles, kind="stable")
        order = [hes[i] for i in idx]
        if len(order) > 1:
            gaps = np.diff(np.concatenate([angles[idx], [angles[idx[0]] + 2 * np.pi]]))
            if float(gaps.min()) < 1e-9:
                raise ConsistencyError(f"ambiguous angular order at node {nid}")
        ccw_order[nid] = order
        pos = {he: i for i, he in enumerate(order)}
        for he in in_at[nid]:
            # next(h): predecessor of twin(h) in CCW order around the head
            nxt[he] = order[(pos[he ^ 1] - 1) % len(order)]
    arr.half_next = nxt

    cycle_of = [-1] * n_half
    cycles: list[list[int]] = []
    for he in range(n_half):
        if cycle_of[he] != -1:
            continue
        cyc = []
        cur = he
        while cycle_of[cur] == -1:
            cycle_of[cur] = len(cycles)
            cyc.append(cur)
            cur = nxt[cur]
        if cur != he:
            raise ConsistencyError("half-edge orbit does not close")
        cycles.append(cyc)

    cycle_pts = [np.vstack([arr.he_points(h)[:-1] for h in cyc]) for cyc in cycles]
    areas = [geom.signed_area(p) for p in cycle_pts]

    pos_idx = [i for i, a in enumerate(areas) if a > 0]
    neg_idx = [i for i, a in enumerate(areas) if a <= 0]
    pos_polys = {i: Polygon(cycle_pts[i]) for i in pos_idx}

    groups: dict[int | None, list[int]] = {i: [i] for i in pos_idx}
    groups.setdefault(None, [])
    for i in neg_idx:
        groups.setdefault(_hole_parent(cycle_pts[i], pos_idx, pos_polys, areas), []).append(i)

    arr.half_face = [""] * n_half
    fcount = 0
    for key in pos_idx + [None]:
        loops = groups.get(key, [])
        if key is None:
            face = ArrangementFace(
                id=f"f{fcount}", boundary_loops=[cycles[i] for i in loops],
                is_unbounded=True, area=None,
            )
        else:
            face = ArrangementFace(
                id=f"f{fcount}", boundary_loops=[cycles[i] for i in loops],
                is_unbounded=False, area=float(sum(areas[i] for i in loops)),
            )
        arr.faces.append(face)
        fcount += 1
        for i in loops:
            for he in cycles[i]:
                arr.half_face[he] = face.id

    for e_idx, e in enumerate(arr.edges):
        e.left_face = arr.half_face[2 * e_idx]
        e.right_face = arr.half_face[2 * e_idx + 1]
    arr._face_by_id = {f.id: f for f in arr.faces}

    # sector faces at crossings in CCW order: face(h) fills the wedge
    # swept CCW starting at ray h
    for c in arr.crossings:
        order = ccw_order[c.id]
        if len(order) != 4:
            raise ConsistencyError(
                f"crossing {c.id} has {len(order)} incident half-edges, expected 4"
            )
        arr.crossing_rays[c.id] = order
        arr.crossing_sectors[c.id] = [arr.half_face[he] for he in order]


def _hole_parent(hole_pts, pos_idx, pos_polys, areas):
    """Outer cycle of the face a hole cycle belongs to: the smallest
    positive cycle strictly containing a point just left of the hole's
    longest segment.  None means the unbounded face."""
    seg = np.roll(hole_pts, -1, axis=0) - hole_pts
    lens = np.linalg.norm(seg, axis=1)
    k = int(np.argmax(lens))
    mid = hole_pts[k] + 0.5 * seg[k]
    d = seg[k] / lens[k]
    left = np.array([-d[1], d[0]])

    prev_cand = None
    have_prev = False
    for frac in (0.25, 0.05, 0.01, 0.002):
        q = mid + frac * lens[k] * left
        if geom.point_in_polyline(q, hole_pts):
            have_prev = False
            continue  # offset landed inside the hole ring; shrink it
        containing = [i for i in pos_idx if pos_polys[i].contains(Point(q))]
        cand = min(containing, key=lambda i: areas[i]) if containing else None
        if have_prev and cand == prev_cand:
            return cand
        prev_cand, have_prev = cand, True
    raise ConsistencyError("could not locate the parent face of a hole cycle")


def _verify_subdivision(arr: Arrangement) -> None:
    v = len(arr.nodes)
    e = len(arr.edges)
    f = len(arr.faces)
    parent = {nid: nid for nid in arr.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for edge in arr.edges:
        ra, rb = find(edge.source), find(edge.target)
        if ra != rb:
            parent[ra] = rb
    comps = len({find(nid) for nid in arr.nodes})
    # V - E + F = 1 + C for a planar subdivision with C components
    if v - e + f != 1 + comps:
        raise ConsistencyError(
            f"Euler formula violated: V={v} E={e} F={f} components={comps}"
        )


def assign_signs(arr: Arrangement) -> Arrangement:
    """Populate containment, sign, region_class and the representative
    interior point of every face; verify the checkerboard property."""
    pts_all = np.vstack([c.points for c in arr.curves.curves])
    lo, hi = pts_all.min(axis=0), pts_all.max(axis=0)
    margin = 0.1 * max(float(np.max(hi - lo)), 1.0)

    for face in arr.faces:
        if face.is_unbounded:
            rep = np.array([hi[0] + margin, hi[1] + margin])
        else:
            outer, holes = arr.face_polygon(face)
            poly = Polygon(outer, holes)
            if not poly.is_valid:
                poly = poly.buffer(0)
            if poly.is_empty:
                raise ConsistencyError(f"face {face.id}: empty polygon")
            rp = poly.representative_point()
            rep = np.array([rp.x, rp.y])
        face.rep_point = rep
        cont = frozenset(
            c.id for c in arr.curves.curves if geom.point_in_polyline(rep, c.points)
        )
        face.containment = cont
        face.sign = MINUS if len(cont) % 2 == 0 else PLUS
        has_a = any(arr.curves.by_id(cid).family == "A" for cid in cont)
        has_b = any(arr.curves.by_id(cid).family == "B" for cid in cont)
        face.region_class = (
            INSIDE_BOTH if has_a and has_b
            else A_ONLY if has_a
            else B_ONLY if has_b
            else OUTSIDE_BOTH
        )

    unb = arr.unbounded_face
    if unb.sign != MINUS or unb.containment:
        raise ConsistencyError("unbounded face must be MINUS with empty containment")
    for e in arr.edges:
        if arr.face(e.left_face).sign == arr.face(e.right_face).sign:
            raise ConsistencyError(
                f"checkerboard violation at edge {e.id}: faces {e.left_face} and "
                f"{e.right_face} carry the same sign"
            )
    for cid, sector in arr.crossing_sectors.items():
        signs = [arr.face(fid).sign for fid in sector]
        if any(signs[i] == signs[(i + 1) % 4] for i in range(4)):
            raise ConsistencyError(f"crossing {cid}: sector signs do not alternate")
    return arr


def build(curves: CurveSet) -> Arrangement:
    """Convenience: crossings + subdivision + signs in one call."""
    return assign_signs(build_arrangement(curves, compute_crossings(curves)))
