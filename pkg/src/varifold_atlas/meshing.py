"""Realize a sheet complex as an embedded triangulated surface.

Sheets are triangulated as planar graphs (boundary chains from the
arrangement edges, hexagonal interior lattice, Delaunay fill), welded
combinatorially through a shared vertex-key registry: smooth
continuations share their edge polylines, helicoid bands share their rim
arcs.  Heights start harmonic (cotangent Laplace with Dirichlet data 0 on
A, t on B, helicoid trace on rims); bands are built as Coons patches over
the clipped curve arcs and the rims, twisting z linearly in angle.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import shapely
from scipy import sparse
from scipy.spatial import Delaunay, QhullError
from shapely.geometry import Polygon

from . import geom
from .discrete import cotangent_stiffness
from .errors import ConsistencyError, GeometryError
from .sheets import BOTTOM, ONLY, TOP, SheetComplex
from .trimesh import HELICOID, INTERIOR, ON_A, ON_B, SEAM, TriMesh
from .varifolds import edge_multiplicity

_TAG_PRIORITY = {INTERIOR: 0, HELICOID: 1, SEAM: 2, ON_A: 3, ON_B: 3}


@dataclass(frozen=True)
class MeshParams:
    """t: plane separation; h: target edge length; rho: crossing cutout
    radius (default max(3h, 5t), clamped below half the minimum crossing
    distance); tol_H: mean-curvature stopping tolerance."""

    t: float
    h: float
    rho: float | None = None
    tol_H: float | None = None
    max_iters: int = 20000
    eig_tol: float = 1e-8

    def resolved(self, arrangement) -> "MeshParams":
        if self.t <= 0:
            raise GeometryError("plane separation t must be positive")
        if self.h <= 0:
            raise GeometryError("target edge length h must be positive")
        diameter = arrangement.curves.diameter
        tol_h = self.tol_H if self.tol_H is not None else 1e-3 / diameter
        rho = self.rho
        positions = [c.position for c in arrangement.crossings]
        dmin = None
        if len(positions) >= 2:
            dmin = min(
                float(np.linalg.norm(positions[i] - positions[j]))
                for i in range(len(positions)) for j in range(i + 1, len(positions))
            )
        if rho is None:
            rho = max(3.0 * self.h, 5.0 * self.t)
            if dmin is not None:
                rho = min(rho, 0.45 * dmin)
        if dmin is not None and rho >= 0.5 * dmin:
            raise GeometryError(
                f"rho={rho:.3g} exceeds half the minimum crossing distance {dmin:.3g}"
            )
        if rho < 3.0 * self.h * (1.0 - 1e-9):
            raise GeometryError(
                f"rho={rho:.3g} violates rho >= 3h (h={self.h:.3g}); reduce h"
            )
        return replace(self, rho=rho, tol_H=tol_h)

    def as_dict(self) -> dict:
        return {"t": self.t, "h": self.h, "rho": self.rho,
                "tol_H": self.tol_H, "max_iters": self.max_iters,
                "eig_tol": self.eig_tol}


@dataclass
class Rim:
    """Cutout rim arc of one multiplicity-1 sector at a helicoidal
    crossing: shared verbatim between the sheet boundary chain and the
    band patch so the weld is watertight."""

    crossing_id: str
    sector: int
    points: np.ndarray          # (n, 2), from clip(rays[s]) to clip(rays[s+1])
    z: np.ndarray               # helicoid trace heights
    keys: list[tuple]           # per-point registry keys


@dataclass
class Clip:
    crossing_id: str
    ray_pos: int                # index into arrangement.crossing_rays[cid]
    edge_id: str
    end: str                    # which end of the edge sits at the crossing
    q: np.ndarray               # clip point on the rho circle
    inner: np.ndarray           # polyline crossing -> q along the curve
    phi: float                  # polar angle of q around the crossing

    @property
    def key(self) -> tuple:
        return ("clip", self.crossing_id, self.ray_pos)


@dataclass
class BandPatch:
    crossing_id: str
    vertices: np.ndarray        # (n, 3)
    triangles: np.ndarray       # local indices
    keys: list[tuple]
    tags: list[int]


@dataclass
class FaceTriangulation:
    face_id: str
    points: np.ndarray                      # (n, 2); chain points first
    triangles: np.ndarray                   # (m, 3) local indices
    chain_templates: list[tuple]            # template per chain point
    n_chain: int


@dataclass
class SurfaceBundle:
    complex: SheetComplex
    params: MeshParams
    components: list[TriMesh]
    component_info: list[dict]              # chi / boundary_loops / genus records
    layer_ids: dict                         # (face_id, layer) -> global vertex ids
    global_to_local: np.ndarray             # (n_global, 2): component, local index
    helicoidal: list[str]                   # crossing ids with bands
    vertices_global: np.ndarray

    def crossing_position(self, cid: str) -> np.ndarray:
        for c in self.complex.arrangement.crossings:
            if c.id == cid:
                return c.position
        raise KeyError(cid)


# --------------------------------------------------------------------------
# scaffold: resampled and clipped edge polylines, rims


class _Scaffold:
    def __init__(self, c: SheetComplex, p: MeshParams):
        self.complex = c
        self.params = p
        arr = c.arrangement
        self.resampled: dict[str, np.ndarray] = {
            e.id: geom.resample_polyline(e.points, p.h, closed=False) for e in arr.edges
        }
        self.clips: dict[tuple[str, int], Clip] = {}
        self.edge_clip_ends: dict[str, dict[str, Clip]] = {e.id: {} for e in arr.edges}
        for cid, band in c.bands.items():
            pos = arr.nodes[cid]
            for ray_pos, he in enumerate(band.rays):
                edge = arr.he_edge(he)
                end = "src" if arr.he_forward(he) else "tgt"
                clip = self._clip_ray(cid, ray_pos, edge, end, pos)
                self.clips[(cid, ray_pos)] = clip
                self.edge_clip_ends[edge.id][end] = clip
        self.edge_mesh: dict[str, tuple[np.ndarray, tuple, tuple]] = {}
        for e in arr.edges:
            self.edge_mesh[e.id] = self._edge_mesh_polyline(e)
        self.rims: dict[tuple[str, int], Rim] = {}
        for cid, band in c.bands.items():
            s1, s2 = band.m1_sectors
            r1 = self._build_rim(cid, s1)
            r2 = self._build_rim(cid, s2)
            # the two rims become the band grid's first and last rows, so
            # they must share one sample count
            n = max(len(r1.points), len(r2.points)) - 1
            self.rims[(cid, s1)] = _resample_rim(r1, n)
            self.rims[(cid, s2)] = _resample_rim(r2, n)

    def _clip_ray(self, cid, ray_pos, edge, end, center) -> Clip:
        """Clip point and inner piece computed on the ORIGINAL edge
        polyline, so both lie exactly on the input curve (the h-resampled
        chain cuts corners by O(h^2))."""
        p = self.params
        pts = edge.points
        if end == "tgt":
            pts = pts[::-1]
        rad = np.linalg.norm(pts - center, axis=1)
        outside = np.nonzero(rad >= p.rho)[0]
        if len(outside) == 0:
            raise GeometryError(
                f"edge {edge.id} never leaves the rho={p.rho:.3g} disk at "
                f"crossing {cid}; face feature smaller than rho"
            )
        k = int(outside[0])
        if k == 0:
            raise ConsistencyError(f"edge {edge.id} does not start at crossing {cid}")
        t_exit = geom.segment_circle_exit(pts[k - 1], pts[k], center, p.rho)
        if t_exit is None:
            raise ConsistencyError(f"no rho-circle exit found on edge {edge.id}")
        q = pts[k - 1] + t_exit * (pts[k] - pts[k - 1])
        inner = np.vstack([pts[:k], q[None, :]])
        d = q - center
        return Clip(crossing_id=cid, ray_pos=ray_pos, edge_id=edge.id, end=end,
                    q=q, inner=inner, phi=float(np.arctan2(d[1], d[0])))

    def _edge_mesh_polyline(self, e):
        """Final polyline of an edge after clipping, plus end descriptors
        (('node', nid) or clip keys)."""
        p = self.params
        pts = self.resampled[e.id]
        clip_src = self.edge_clip_ends[e.id].get("src")
        clip_tgt = self.edge_clip_ends[e.id].get("tgt")
        lo = 0
        hi = len(pts)
        if clip_src is not None:
            rad = np.linalg.norm(pts - clip_src.inner[0], axis=1)
            lo = int(np.nonzero(rad >= p.rho)[0][0])
        if clip_tgt is not None:
            rad = np.linalg.norm(pts - clip_tgt.inner[0], axis=1)
            hi = int(np.nonzero(rad[::-1] >= p.rho)[0][0])
            hi = len(pts) - hi
        mid = pts[lo:hi]
        if clip_src is not None:
            keep = np.linalg.norm(mid - clip_src.q, axis=1) > 0.35 * p.h
            mid = mid[keep]
            mid = np.vstack([clip_src.q[None, :], mid])
        if clip_tgt is not None:
            keep = np.linalg.norm(mid - clip_tgt.q, axis=1) > 0.35 * p.h
            if clip_src is not None:
                keep[0] = True
            mid = mid[keep]
            mid = np.vstack([mid, clip_tgt.q[None, :]])
        if len(mid) < 2 or geom.arc_lengths(mid, closed=False)[-1] <= 0.2 * p.h:
            raise GeometryError(
                f"edge {e.id} collapses after rho-clipping; crossings too close "
                f"for rho={p.rho:.3g}"
            )
        src_desc = clip_src.key if clip_src is not None else ("node", e.source)
        tgt_desc = clip_tgt.key if clip_tgt is not None else ("node", e.target)
        return mid, src_desc, tgt_desc

    def _build_rim(self, cid, s) -> Rim:
        arr = self.complex.arrangement
        p = self.params
        band = self.complex.bands[cid]
        center = arr.nodes[cid]
        c0 = self.clips[(cid, s)]
        c1 = self.clips[(cid, (s + 1) % 4)]
        phi0 = c0.phi
        dphi = (c1.phi - phi0) % (2.0 * np.pi)
        if dphi <= 1e-9 or dphi >= np.pi + 0.5:
            raise ConsistencyError(
                f"rim arc at crossing {cid} sector {s} spans {dphi:.3f} rad"
            )
        n = max(2, int(np.ceil(dphi * p.rho / p.h)))
        phis = phi0 + dphi * np.arange(n + 1) / n
        pts = center + p.rho * np.column_stack([np.cos(phis), np.sin(phis)])
        pts[0] = c0.q
        pts[-1] = c1.q
        # helicoid trace: 0 at the A-ray end, t at the B-ray end, linear in angle
        fam0 = arr.he_edge(band.rays[s]).family
        frac = (phis - phi0) / dphi
        z = p.t * frac if fam0 == "A" else p.t * (1.0 - frac)
        keys = [c0.key] + [("rim", cid, s, k) for k in range(1, n)] + [c1.key]
        return Rim(crossing_id=cid, sector=s, points=pts, z=z, keys=keys)


def _resample_rim(rim: Rim, n: int) -> Rim:
    if len(rim.points) - 1 == n:
        return rim
    cum = geom.arc_lengths(rim.points, closed=False)
    tt = np.linspace(0.0, cum[-1], n + 1)
    xy = np.column_stack([np.interp(tt, cum, rim.points[:, 0]),
                          np.interp(tt, cum, rim.points[:, 1])])
    zz = np.interp(tt, cum, rim.z)
    xy[0], xy[-1] = rim.points[0], rim.points[-1]
    zz[0], zz[-1] = rim.z[0], rim.z[-1]
    keys = ([rim.keys[0]]
            + [("rim", rim.crossing_id, rim.sector, k) for k in range(1, n)]
            + [rim.keys[-1]])
    return Rim(crossing_id=rim.crossing_id, sector=rim.sector,
               points=xy, z=zz, keys=keys)


# --------------------------------------------------------------------------
# band patches


def _oriented_rim(scaf: _Scaffold, cid: str, s: int):
    """Rim oriented A-end -> B-end; returns (xy, z, keys, a_ray, b_ray)."""
    arr = scaf.complex.arrangement
    band = scaf.complex.bands[cid]
    rim = scaf.rims[(cid, s)]
    ray0, ray1 = s, (s + 1) % 4
    fam0 = arr.he_edge(band.rays[ray0]).family
    if fam0 == "A":
        return rim.points, rim.z, rim.keys, ray0, ray1
    return rim.points[::-1], rim.z[::-1], rim.keys[::-1], ray1, ray0


def _resample_with_keys(pts: np.ndarray, count: int, key_maker):
    """Resample a polyline to count+1 points (endpoints exact); interior
    keys from key_maker(k)."""
    cum = geom.arc_lengths(pts, closed=False)
    targets = np.linspace(0.0, cum[-1], count + 1)
    xs = np.interp(targets, cum, pts[:, 0])
    ys = np.interp(targets, cum, pts[:, 1])
    out = np.column_stack([xs, ys])
    out[0] = pts[0]
    out[-1] = pts[-1]
    keys = [None] + [key_maker(k) for k in range(1, count)] + [None]
    return out, keys


def insert_helicoid(c: SheetComplex, crossing_id: str, p: MeshParams,
                    scaffold: _Scaffold | None = None) -> BandPatch:
    """Twisted strip bridging the two multiplicity-1 sheets at a
    helicoidal crossing: a Coons patch over the clipped curve arcs
    (boundaries at z=0 and z=t) and the two rim traces; z is the linear-
    in-angle helicoid trace blended across the strip, so z stays in
    [0, t] and the rims match the sheet cutouts exactly."""
    scaf = scaffold or _Scaffold(c, p)
    arr = c.arrangement
    band = c.bands[crossing_id]
    cid = crossing_id
    s1, s2 = band.m1_sectors

    r_lo_xy, r_lo_z, r_lo_keys, a_lo, b_lo = _oriented_rim(scaf, cid, s1)
    r_hi_xy, r_hi_z, r_hi_keys, a_hi, b_hi = _oriented_rim(scaf, cid, s2)
    if len(r_lo_xy) != len(r_hi_xy):
        raise ConsistencyError(f"band {cid}: rim sample counts differ")
    nu = len(r_lo_xy) - 1

    nv2 = max(1, int(np.ceil(p.rho / p.h)))
    nv = 2 * nv2

    def side(clip_lo: Clip, clip_hi: Clip, tag_char: str):
        """Curve-side polyline from clip_lo.q through the crossing to
        clip_hi.q, resampled per half so the crossing stays a grid point."""
        half1, _ = _resample_with_keys(clip_lo.inner[::-1], nv2, lambda k: None)
        half2, _ = _resample_with_keys(clip_hi.inner, nv2, lambda k: None)
        xy = np.vstack([half1, half2[1:]])
        keys = ([clip_lo.key]
                + [("band" + tag_char, cid, k) for k in range(1, nv2)]
                + [("bandnode", cid, tag_char)]
                + [("band" + tag_char, cid, nv2 + k) for k in range(1, nv2)]
                + [clip_hi.key])
        return xy, keys

    a_side_xy, a_keys = side(scaf.clips[(cid, a_lo)], scaf.clips[(cid, a_hi)], "A")
    b_side_xy, b_keys = side(scaf.clips[(cid, b_lo)], scaf.clips[(cid, b_hi)], "B")

    # Coons blend on xy; z blends the two rim traces
    u = np.linspace(0.0, 1.0, nu + 1)[None, :, None]     # along rims, A -> B
    v = np.linspace(0.0, 1.0, nv + 1)[:, None, None]     # across, rim_lo -> rim_hi
    A = a_side_xy[:, None, :]
    B = b_side_xy[:, None, :]
    R0 = r_lo_xy[None, :, :]
    R1 = r_hi_xy[None, :, :]
    c00 = a_side_xy[0]
    c01 = b_side_xy[0]
    c10 = a_side_xy[-1]
    c11 = b_side_xy[-1]
    xy = ((1 - u) * A + u * B + (1 - v) * R0 + v * R1
          - ((1 - u) * (1 - v) * c00 + u * (1 - v) * c01
             + (1 - u) * v * c10 + u * v * c11))
    z = (1 - v[:, :, 0]) * r_lo_z[None, :] + v[:, :, 0] * r_hi_z[None, :]

    # exact sides
    xy[0, :, :] = r_lo_xy
    xy[-1, :, :] = r_hi_xy
    xy[:, 0, :] = a_side_xy
    xy[:, -1, :] = b_side_xy
    z[0, :] = r_lo_z
    z[-1, :] = r_hi_z
    z[:, 0] = 0.0
    z[:, -1] = p.t

    verts = np.concatenate([xy.reshape(-1, 2), z.reshape(-1, 1)], axis=1)
    keys = []
    tags = []
    for i in range(nv + 1):
        for j in range(nu + 1):
            if i == 0:
                key, tag = r_lo_keys[j], SEAM
            elif i == nv:
                key, tag = r_hi_keys[j], SEAM
            elif j == 0:
                key, tag = a_keys[i], ON_A
            elif j == nu:
                key, tag = b_keys[i], ON_B
            else:
                key, tag = ("bandint", cid, i, j), HELICOID
            if key is None:
                raise ConsistencyError("band side key missing")
            if key[0] == "clip":
                tag = ON_A if arr.he_edge(band.rays[key[2]]).family == "A" else ON_B
            keys.append(key)
            tags.append(tag)

    tris = []
    for i in range(nv):
        for j in range(nu):
            q00 = i * (nu + 1) + j
            q01 = q00 + 1
            q10 = q00 + (nu + 1)
            q11 = q10 + 1
            if (i + j) % 2 == 0:
                tris += [[q00, q01, q11], [q00, q11, q10]]
            else:
                tris += [[q00, q01, q10], [q01, q11, q10]]
    return BandPatch(crossing_id=cid, vertices=verts,
                     triangles=np.array(tris, dtype=np.int32), keys=keys, tags=tags)


# --------------------------------------------------------------------------
# sheet triangulation


def _face_chains(scaf: _Scaffold, face) -> list[list[tuple[np.ndarray, tuple]]]:
    """Boundary chains of a face with rho-cutout rims inserted; each chain
    entry is (xy point, template key)."""
    c = scaf.complex
    arr = c.arrangement
    chains = []
    for loop in face.boundary_loops:
        chain: list[tuple[np.ndarray, tuple]] = []
        m = len(loop)
        for i, he in enumerate(loop):
            e = arr.he_edge(he)
            pts, src_desc, tgt_desc = scaf.edge_mesh[e.id]
            n_pts = len(pts)
            if arr.he_forward(he):
                seq = range(n_pts)
                start_desc, end_desc = src_desc, tgt_desc
            else:
                seq = range(n_pts - 1, -1, -1)
                start_desc, end_desc = tgt_desc, src_desc
            templ = []
            for k in seq:
                if k == 0:
                    key = src_desc if src_desc[0] == "clip" else ("nodeend", e.source, e.id)
                elif k == n_pts - 1:
                    key = tgt_desc if tgt_desc[0] == "clip" else ("nodeend", e.target, e.id)
                else:
                    key = ("edge", e.id, k)
                templ.append(key)
            pts_o = pts if arr.he_forward(he) else pts[::-1]
            for k in range(n_pts - 1):
                chain.append((pts_o[k], templ[k]))
            # transition through the head node: insert the rim when the
            # corner is cut out
            head = arr.he_head(he)
            if head in c.bands:
                nxt = loop[(i + 1) % m]
                sector = arr.crossing_rays[head].index(nxt)
                rim = scaf.rims.get((head, sector))
                if rim is None:
                    raise ConsistencyError(
                        f"face {face.id} corner at {head} has no rim (sector {sector})"
                    )
                rpts = rim.points[::-1]
                rkeys = rim.keys[::-1]
                for k in range(len(rpts) - 1):
                    chain.append((rpts[k], rkeys[k]))
        chains.append(chain)
    return chains


def _hex_lattice(poly: Polygon, h: float) -> np.ndarray:
    minx, miny, maxx, maxy = poly.bounds
    eroded = poly.buffer(-0.6 * h)
    if eroded.is_empty:
        return np.zeros((0, 2))
    dy = h * np.sqrt(3.0) / 2.0
    rows = int(np.floor((maxy - miny) / dy)) + 1
    pts = []
    y = miny + 0.5 * dy
    row = 0
    while y < maxy:
        x0 = minx + (0.25 if row % 2 else 0.75) * h
        xs = np.arange(x0, maxx, h)
        pts.append(np.column_stack([xs, np.full(len(xs), y)]))
        y += dy
        row += 1
    if not pts:
        return np.zeros((0, 2))
    cand = np.vstack(pts)
    mask = shapely.contains_xy(eroded, cand[:, 0], cand[:, 1])
    return cand[mask]


def triangulate_sheets(c: SheetComplex, p: MeshParams,
                       scaffold: _Scaffold | None = None) -> dict[str, FaceTriangulation]:
    """Conforming 2D triangulation per sheet-carrying face: boundary
    chains kept verbatim (so seams weld exactly), hexagonal interior
    lattice, Delaunay fill filtered to the face polygon."""
    scaf = scaffold or _Scaffold(c, p)
    out: dict[str, FaceTriangulation] = {}
    for fid in sorted({s.face_id for s in c.sheets},
                      key=lambda f: int(f[1:]) if f[1:].isdigit() else 0):
        face = c.arrangement.face(fid)
        chains = _face_chains(scaf, face)
        out[fid] = _triangulate_face(fid, chains, p)
    return out


def _triangulate_face(fid: str, chains, p: MeshParams) -> FaceTriangulation:
    loops_xy = [np.array([pt for pt, _ in chain]) for chain in chains]
    templates = [key for chain in chains for _, key in chain]
    n_chain = sum(len(chain) for chain in chains)
    chain_xy = np.vstack(loops_xy)

    dup = _min_pairwise_gap(chain_xy)
    if dup < 1e-9 * max(p.h, 1.0):
        raise GeometryError(
            f"face {fid}: coincident boundary chain points (pinched face?)"
        )

    outer_i = int(np.argmax([geom.signed_area(lp) for lp in loops_xy]))
    shell = loops_xy[outer_i]
    holes = [lp for i, lp in enumerate(loops_xy) if i != outer_i]
    poly = Polygon(shell, holes)
    if not poly.is_valid or poly.is_empty:
        raise GeometryError(f"face {fid}: invalid boundary polygon for triangulation")

    lattice = _hex_lattice(poly, p.h)
    pts = np.vstack([chain_xy, lattice]) if len(lattice) else chain_xy
    try:
        dela = Delaunay(pts)
    except QhullError as exc:
        raise GeometryError(f"face {fid}: triangulation failure ({exc})") from exc
    tris = dela.simplices.astype(np.int32)
    cent = pts[tris].mean(axis=1)
    keep = shapely.contains_xy(poly, cent[:, 0], cent[:, 1])
    tris = tris[keep]
    if len(tris) == 0:
        raise GeometryError(f"face {fid}: triangulation failure (no interior)")
    # enforce CCW triangles
    v0, v1, v2 = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    det = (v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1]) - (v1[:, 1] - v0[:, 1]) * (v2[:, 0] - v0[:, 0])
    flip = det < 0
    tris[flip] = tris[flip][:, ::-1]

    _validate_face_mesh(fid, pts, tris, loops_xy)
    return FaceTriangulation(face_id=fid, points=pts, triangles=tris,
                             chain_templates=templates, n_chain=n_chain)


def _min_pairwise_gap(pts: np.ndarray) -> float:
    from scipy.spatial import cKDTree

    tree = cKDTree(pts)
    d, _ = tree.query(pts, k=2)
    return float(d[:, 1].min())


def _validate_face_mesh(fid, pts, tris, loops_xy) -> None:
    directed = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    uniq, inv, counts = np.unique(und, axis=0, return_inverse=True, return_counts=True)
    if counts.max(initial=0) > 2:
        raise GeometryError(f"face {fid}: non-manifold triangulation")
    bnd = und[counts[inv] == 1]
    bnd_set = {tuple(e) for e in bnd}
    expected = set()
    offset = 0
    for lp in loops_xy:
        n = len(lp)
        for k in range(n):
            expected.add(tuple(sorted((offset + k, offset + (k + 1) % n))))
        offset += n
    if bnd_set != expected:
        raise GeometryError(
            f"face {fid}: triangulation boundary does not match the face "
            f"boundary ({len(bnd_set ^ expected)} mismatched edges)"
        )
    angles = _tri_min_angle_deg(pts, tris)
    if angles <= 1.0:
        raise GeometryError(
            f"face {fid}: degenerate triangle (min angle {angles:.2f} deg <= 1 deg)"
        )


def _tri_min_angle_deg(pts, tris) -> float:
    worst = 180.0
    for k in range(3):
        a = pts[tris[:, k]]
        b = pts[tris[:, (k + 1) % 3]]
        c = pts[tris[:, (k + 2) % 3]]
        u1 = b - a
        u2 = c - a
        cosang = np.einsum("ij,ij->i", u1, u2) / np.maximum(
            np.linalg.norm(u1, axis=1) * np.linalg.norm(u2, axis=1), 1e-300)
        ang = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
        worst = min(worst, float(ang.min()))
    return worst


# --------------------------------------------------------------------------
# welding registry and assembly


class _Registry:
    def __init__(self):
        self.index: dict[tuple, int] = {}
        self.xy: list[np.ndarray] = []
        self.z: list[float | None] = []
        self.tag: list[int] = []

    def add(self, key, xy, z, tag) -> int:
        idx = self.index.get(key)
        if idx is None:
            idx = len(self.xy)
            self.index[key] = idx
            self.xy.append(np.asarray(xy, float))
            self.z.append(z)
            self.tag.append(tag)
            return idx
        if not np.allclose(self.xy[idx], xy, atol=1e-9):
            raise ConsistencyError(f"registry key {key}: conflicting positions")
        if z is not None:
            if self.z[idx] is None:
                self.z[idx] = z
            elif abs(self.z[idx] - z) > 1e-9:
                raise ConsistencyError(f"registry key {key}: conflicting heights")
        if _TAG_PRIORITY[tag] > _TAG_PRIORITY[self.tag[idx]]:
            self.tag[idx] = tag
        return idx


def _edge_role(c: SheetComplex, edge, layer: str) -> str:
    mult = edge_multiplicity(c.varifold, edge)
    if mult == 1:
        return "m1"
    cont_layer = TOP if edge.family == "A" else BOTTOM
    if layer == ONLY or layer == cont_layer:
        return "cont"
    return "end"


def _resolve_template(c: SheetComplex, scaf: _Scaffold, key: tuple, layer: str,
                      p: MeshParams):
    """(registry key, z, tag) for a chain template instantiated on a
    given sheet layer."""
    arr = c.arrangement
    kind = key[0]
    if kind == "edge":
        _, eid, k = key
        edge = arr.edges[int(eid[1:])]
        role = _edge_role(c, edge, layer)
        if role == "cont":
            return ("edge", eid, k, "cont"), None, SEAM
        grp = "m1" if role == "m1" else "end"
        if edge.family == "A":
            return ("edge", eid, k, grp), 0.0, ON_A
        return ("edge", eid, k, grp), p.t, ON_B
    if kind == "nodeend":
        _, nid, eid = key
        edge = arr.edges[int(eid[1:])]
        role = _edge_role(c, edge, layer)
        if role == "cont":
            height = 1 if edge.family == "A" else 0
            return ("node", nid, height), None, SEAM
        height = 0 if edge.family == "A" else 1
        if height == 0:
            return ("node", nid, 0), 0.0, ON_A
        return ("node", nid, 1), p.t, ON_B
    if kind == "clip":
        _, cid, ray_pos = key
        clip = scaf.clips[(cid, ray_pos)]
        edge = arr.edges[int(clip.edge_id[1:])]
        if edge.family == "A":
            return key, 0.0, ON_A
        return key, p.t, ON_B
    if kind == "rim":
        _, cid, sector, k = key
        rim = scaf.rims[(cid, sector)]
        return key, float(rim.z[k]), SEAM
    raise ConsistencyError(f"unknown chain template {key}")


def initial_heights(c: SheetComplex, face_tris: dict[str, FaceTriangulation],
                    p: MeshParams, scaffold: _Scaffold | None = None,
                    bands: dict[str, BandPatch] | None = None):
    """Weld the sheet triangulations and band patches through the key
    registry and solve the discrete Laplace equation for the unknown
    heights (Dirichlet: 0 on A, t on B, helicoid trace on rims).

    Returns (global vertices (n,3), triangles, tags, owner cell per
    triangle, layer_ids).
    """
    scaf = scaffold or _Scaffold(c, p)
    if bands is None:
        bands = {cid: insert_helicoid(c, cid, p, scaf) for cid in c.bands}
    reg = _Registry()
    triangles: list[np.ndarray] = []
    owners: list[tuple] = []
    layer_ids: dict[tuple, np.ndarray] = {}
    solve_tris: list[np.ndarray] = []

    for sheet in c.sheets:
        ft = face_tris[sheet.face_id]
        gids = np.empty(len(ft.points), dtype=np.int64)
        for i in range(ft.n_chain):
            key, z, tag = _resolve_template(c, scaf, ft.chain_templates[i],
                                            sheet.layer, p)
            gids[i] = reg.add(key, ft.points[i], z, tag)
        for i in range(ft.n_chain, len(ft.points)):
            key = ("lat", sheet.face_id, sheet.layer, i)
            gids[i] = reg.add(key, ft.points[i], None, INTERIOR)
        tri = gids[ft.triangles]
        triangles.append(tri)
        solve_tris.append(tri)
        owners += [("sheet", sheet.face_id, sheet.layer)] * len(tri)
        layer_ids[(sheet.face_id, sheet.layer)] = gids

    for cid, patch in bands.items():
        gids = np.empty(len(patch.vertices), dtype=np.int64)
        for i, key in enumerate(patch.keys):
            gids[i] = reg.add(key, patch.vertices[i, :2],
                              float(patch.vertices[i, 2]), patch.tags[i])
        tri = gids[patch.triangles]
        triangles.append(tri)
        owners += [("band", cid)] * len(tri)

    tris = np.vstack(triangles).astype(np.int64)
    n = len(reg.xy)
    xy = np.vstack(reg.xy)
    zfix = np.array([np.nan if z is None else z for z in reg.z])
    tags = np.array(reg.tag, dtype=np.int8)

    unknown = np.isnan(zfix)
    if unknown.any():
        pts3 = np.column_stack([xy, np.zeros(n)])
        solve_t = np.vstack(solve_tris)
        S = cotangent_stiffness(pts3, solve_t).tocsr()
        _check_solvable(S, unknown, solve_t)
        iu = np.nonzero(unknown)[0]
        ib = np.nonzero(~unknown)[0]
        Suu = S[iu][:, iu]
        Sub = S[iu][:, ib]
        rhs = -Sub @ zfix[ib]
        zu = sparse.linalg.spsolve(Suu.tocsc(), rhs)
        z = zfix.copy()
        z[iu] = zu
    else:
        z = zfix

    lo, hi = float(z.min(initial=0.0)), float(z.max(initial=0.0))
    slack = 1e-6 * p.t
    if lo < -slack or hi > p.t + slack:
        raise ConsistencyError(
            f"harmonic heights escape [0, t]: range [{lo:.3e}, {hi:.3e}], "
            f"discrete maximum principle violated"
        )
    vertices = np.column_stack([xy, z])
    return vertices, tris, tags, owners, layer_ids


def _check_solvable(S, unknown, tris) -> None:
    """Every connected patch of unknown vertices must touch a Dirichlet
    vertex; otherwise the Laplace system is singular."""
    n = S.shape[0]
    parent = np.arange(n)

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for tri in tris:
        a = find(tri[0])
        for vv in tri[1:]:
            b = find(vv)
            if a != b:
                parent[b] = a
                a = find(a)
    has_fixed = {}
    for v in range(n):
        r = find(v)
        has_fixed.setdefault(r, False)
        if not unknown[v]:
            has_fixed[r] = True
    for v in np.nonzero(unknown)[0]:
        if not has_fixed[find(v)]:
            raise ConsistencyError(
                "singular height system: a component has no boundary data"
            )


def assemble_mesh(c: SheetComplex, p: MeshParams) -> SurfaceBundle:
    """Full pipeline: scaffold, per-face triangulations, band patches,
    welding, harmonic heights, component split, orientation, validation
    against the abstract complex."""
    p = p.resolved(c.arrangement)
    scaf = _Scaffold(c, p)
    face_tris = triangulate_sheets(c, p, scaf)
    bands = {cid: insert_helicoid(c, cid, p, scaf) for cid in c.bands}
    vertices, tris, tags, owners, layer_ids = initial_heights(c, face_tris, p, scaf, bands)

    from .sheets import genus_and_boundaries

    records = genus_and_boundaries(c)
    comp_of_tri = np.array([c.component_of(o) for o in owners])
    n_comp = c.n_components
    comps: list[TriMesh] = []
    global_to_local = -np.ones((len(vertices), 2), dtype=np.int64)
    for ci in range(n_comp):
        sub = tris[comp_of_tri == ci]
        if len(sub) == 0:
            raise ConsistencyError(f"abstract component {ci} produced no triangles")
        vids = np.unique(sub)
        remap = -np.ones(len(vertices), dtype=np.int64)
        remap[vids] = np.arange(len(vids))
        if (global_to_local[vids, 0] >= 0).any():
            raise ConsistencyError("vertex shared between mesh components")
        global_to_local[vids, 0] = ci
        global_to_local[vids, 1] = np.arange(len(vids))
        mesh = TriMesh(vertices[vids], remap[sub].astype(np.int32), tags[vids])
        mesh.orient_consistently()
        if float(mesh.triangle_normals()[:, 2].sum()) < 0:
            mesh.triangles = mesh.triangles[:, ::-1].copy()
        mesh.validate()
        rec = records[ci]
        if mesh.euler_characteristic() != rec["chi"]:
            raise ConsistencyError(
                f"component {ci}: mesh Euler characteristic "
                f"{mesh.euler_characteristic()} != complex chi {rec['chi']}"
            )
        if len(mesh.boundary_loops()) != rec["boundary_loops"]:
            raise ConsistencyError(
                f"component {ci}: mesh boundary loops "
                f"{len(mesh.boundary_loops())} != complex {rec['boundary_loops']}"
            )
        if mesh.min_angle_deg() <= 1.0:
            raise GeometryError(
                f"component {ci}: degenerate triangle after assembly"
            )
        comps.append(mesh)

    _check_boundary_heights(comps, p)
    return SurfaceBundle(
        complex=c, params=p, components=comps, component_info=records,
        layer_ids=layer_ids, global_to_local=global_to_local,
        helicoidal=sorted(c.bands), vertices_global=vertices,
    )


def _check_boundary_heights(comps: list[TriMesh], p: MeshParams) -> None:
    for mesh in comps:
        on_a = mesh.vertex_tags == ON_A
        on_b = mesh.vertex_tags == ON_B
        if on_a.any() and not np.all(mesh.vertices[on_a, 2] == 0.0):
            raise ConsistencyError("ON_A vertex with z != 0")
        if on_b.any() and not np.all(mesh.vertices[on_b, 2] == p.t):
            raise ConsistencyError("ON_B vertex with z != t")
        bnd = mesh.boundary_vertex_mask()
        if not np.all(on_a[bnd] | on_b[bnd]):
            raise ConsistencyError("boundary vertex not tagged ON_A/ON_B")
