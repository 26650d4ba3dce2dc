"""Abstract glued-sheet surface over a varifold.

Every multiplicity-1 face carries one sheet, every multiplicity-2 face a
TOP and a BOTTOM sheet.  Sheets end on their curves (BOUNDARY), continue
smoothly across multiplicity-2 edges, and are bridged by one twisted band
per helicoidal crossing.  The glued complex yields the topology oracles:
Euler characteristic by direct cell count, boundary loops, components and
genus, all independent of the combinatorial chi formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .arrangement import Arrangement
from .errors import ConsistencyError
from .varifolds import DOUBLE_GRAPH, HELICOIDAL, Varifold, classify_crossing, edge_multiplicity

ONLY = "ONLY"
TOP = "TOP"
BOTTOM = "BOTTOM"

SMOOTH_CONTINUATION = "SMOOTH_CONTINUATION"
HELICOIDAL_BAND = "HELICOIDAL_BAND"
BOUNDARY = "BOUNDARY"

SheetKey = tuple[str, str]  # (face id, layer)


@dataclass(frozen=True)
class Sheet:
    face_id: str
    layer: str  # ONLY | TOP | BOTTOM

    @property
    def key(self) -> SheetKey:
        return (self.face_id, self.layer)


@dataclass(frozen=True)
class Seam:
    kind: str                  # SMOOTH_CONTINUATION | HELICOIDAL_BAND | BOUNDARY
    ref: str                   # edge id, or crossing id for a band
    sheets: tuple[SheetKey, ...]
    family: str | None = None  # boundary curve family for BOUNDARY seams


@dataclass(frozen=True)
class BandInfo:
    """Geometry-free description of the twisted strip at a helicoidal
    crossing: the four rays (outgoing half-edges) in CCW order, the two
    multiplicity-1 sector positions, and the ray positions per family."""

    crossing_id: str
    rays: tuple[int, ...]          # outgoing half-edge indices, CCW
    sector_faces: tuple[str, ...]  # face per CCW sector
    m1_sectors: tuple[int, int]    # opposite sector positions with m=1
    a_rays: tuple[int, int]        # positions of the two curve-A rays
    b_rays: tuple[int, int]


@dataclass
class _LiftedEdge:
    key: tuple
    v0: tuple
    v1: tuple
    boundary: bool
    cells: tuple          # adjacent 2-cell keys
    family: str | None = None


class SheetComplex:
    def __init__(self, arrangement: Arrangement, varifold: Varifold):
        self.arrangement = arrangement
        self.varifold = varifold
        self.sheets: list[Sheet] = []
        self.seams: list[Seam] = []
        self.bands: dict[str, BandInfo] = {}
        self.crossing_types: dict[str, str] = {}
        # expanded CW cells
        self._vertices: set[tuple] = set()
        self._edges: list[_LiftedEdge] = []
        self._cells: list[tuple] = []
        self._cell_weight: dict[tuple, int] = {}
        self._comp_of_cell: dict[tuple, int] = {}
        self.n_components: int = 0

    # --- derived topology -------------------------------------------------
    def cell_counts(self) -> tuple[int, int, int]:
        """(vertices, edges, total face Euler weight); the face weight is
        the 2-cell count when every face is a disk."""
        return (len(self._vertices), len(self._edges),
                sum(self._cell_weight[k] for k in self._cells))

    def component_of(self, cell_key: tuple) -> int:
        return self._comp_of_cell[cell_key]

    def component_sheets(self, comp: int) -> list[Sheet]:
        return [s for s in self.sheets if self._comp_of_cell[("sheet",) + s.key] == comp]

    def component_bands(self, comp: int) -> list[str]:
        return [cid for cid in self.bands
                if self._comp_of_cell[("band", cid)] == comp]

    def boundary_loop_count(self) -> int:
        return sum(r["boundary_loops"] for r in genus_and_boundaries(self))


def build_complex(arr: Arrangement, v: Varifold) -> SheetComplex:
    """Assemble sheets, seams and the expanded cell complex."""
    c = SheetComplex(arr, v)

    for f in arr.faces:
        m = v.m(f.id)
        if m == 1:
            c.sheets.append(Sheet(f.id, ONLY))
        elif m == 2:
            c.sheets.append(Sheet(f.id, TOP))
            c.sheets.append(Sheet(f.id, BOTTOM))
    sheet_keys = {s.key for s in c.sheets}

    def sheet_of(face_id: str) -> SheetKey:
        key = (face_id, ONLY)
        if key not in sheet_keys:
            raise ConsistencyError(f"expected a multiplicity-1 sheet over {face_id}")
        return key

    # seams per edge
    for e in arr.edges:
        mult = edge_multiplicity(v, e)
        ml, mr = v.m(e.left_face), v.m(e.right_face)
        if mult == 1:
            one_face = e.left_face if ml == 1 else e.right_face
            c.seams.append(Seam(BOUNDARY, e.id, (sheet_of(one_face),), family=e.family))
        else:
            m2_face = e.left_face if ml == 2 else e.right_face
            m1_face = e.right_face if ml == 2 else e.left_face
            if e.family == "A":
                cont_layer, end_layer = TOP, BOTTOM   # BOTTOM ends on A at z=0
            else:
                cont_layer, end_layer = BOTTOM, TOP   # TOP ends on B at z=t
            c.seams.append(
                Seam(SMOOTH_CONTINUATION, e.id, (sheet_of(m1_face), (m2_face, cont_layer)))
            )
            c.seams.append(Seam(BOUNDARY, e.id, ((m2_face, end_layer),), family=e.family))

    # seams per crossing
    for cr in arr.crossings:
        ctype = classify_crossing(v, cr)
        c.crossing_types[cr.id] = ctype
        if ctype != HELICOIDAL:
            continue
        rays = arr.crossing_rays[cr.id]
        sector_faces = arr.crossing_sectors[cr.id]
        mults = [v.m(fid) for fid in sector_faces]
        m1_pos = tuple(i for i in range(4) if mults[i] == 1)
        if m1_pos not in ((0, 2), (1, 3)):
            raise ConsistencyError(f"crossing {cr.id}: m=1 sectors are not opposite")
        fams = [arr.he_edge(he).family for he in rays]
        a_pos = tuple(i for i in range(4) if fams[i] == "A")
        b_pos = tuple(i for i in range(4) if fams[i] == "B")
        if a_pos not in ((0, 2), (1, 3)) or b_pos not in ((0, 2), (1, 3)):
            raise ConsistencyError(f"crossing {cr.id}: curve rays do not alternate")
        s1, s2 = m1_pos
        c.seams.append(
            Seam(HELICOIDAL_BAND, cr.id,
                 (sheet_of(sector_faces[s1]), sheet_of(sector_faces[s2])))
        )
        c.bands[cr.id] = BandInfo(
            crossing_id=cr.id, rays=tuple(rays), sector_faces=tuple(sector_faces),
            m1_sectors=m1_pos, a_rays=a_pos, b_rays=b_pos,
        )

    _expand_cells(c)
    _verify_sheet_sides(c)
    return c


def _ray_end(arr: Arrangement, he: int) -> tuple[str, str]:
    """(edge id, end) identifying which end of its edge a ray occupies."""
    e = arr.he_edge(he)
    return (e.id, "src" if arr.he_forward(he) else "tgt")


def _lift_endpoint(c: SheetComplex, edge, end: str, layer_height: str) -> tuple:
    """Lifted vertex at one end of an edge's lifted copy.

    layer_height is "TOP" (z=t) or "BOTTOM" (z=0), chosen by which layer
    the lifted copy lives on at a double-graph crossing.
    """
    arr = c.arrangement
    node = edge.source if end == "src" else edge.target
    if node in arr.synthetic_vertices:
        return ("syn", node, layer_height)
    ctype = c.crossing_types[node]
    if ctype == HELICOIDAL:
        return ("clip", node, edge.id, end)
    return ("dg", node, layer_height)


def _expand_cells(c: SheetComplex) -> None:
    arr = c.arrangement
    v = c.varifold

    cells = [("sheet",) + s.key for s in c.sheets]
    cells += [("band", cid) for cid in c.bands]
    edges: list[_LiftedEdge] = []

    for e in arr.edges:
        mult = edge_multiplicity(v, e)
        ml = v.m(e.left_face)
        if mult == 1:
            one_face = e.left_face if ml == 1 else e.right_face
            height = BOTTOM if e.family == "A" else TOP
            edges.append(_LiftedEdge(
                key=("arc", e.id), boundary=True, family=e.family,
                v0=_lift_endpoint(c, e, "src", height),
                v1=_lift_endpoint(c, e, "tgt", height),
                cells=(("sheet", one_face, ONLY),),
            ))
        else:
            m2_face = e.left_face if ml == 2 else e.right_face
            m1_face = e.right_face if ml == 2 else e.left_face
            cont_layer = TOP if e.family == "A" else BOTTOM
            end_layer = BOTTOM if e.family == "A" else TOP
            for node in (e.source, e.target):
                if node not in arr.synthetic_vertices and c.crossing_types[node] == HELICOIDAL:
                    raise ConsistencyError(
                        f"multiplicity-2 edge {e.id} ends at helicoidal crossing {node}"
                    )
            edges.append(_LiftedEdge(
                key=("arc_cont", e.id), boundary=False,
                v0=_lift_endpoint(c, e, "src", cont_layer),
                v1=_lift_endpoint(c, e, "tgt", cont_layer),
                cells=(("sheet", m1_face, ONLY), ("sheet", m2_face, cont_layer)),
            ))
            edges.append(_LiftedEdge(
                key=("arc_end", e.id), boundary=True, family=e.family,
                v0=_lift_endpoint(c, e, "src", end_layer),
                v1=_lift_endpoint(c, e, "tgt", end_layer),
                cells=(("sheet", m2_face, end_layer),),
            ))

    for cid, band in c.bands.items():
        rays = band.rays
        clip = [("clip", cid, arr.he_edge(he).id,
                 "src" if arr.he_forward(he) else "tgt") for he in rays]
        s1, s2 = band.m1_sectors
        for s in (s1, s2):
            edges.append(_LiftedEdge(
                key=("rim", cid, s), boundary=False,
                v0=clip[s], v1=clip[(s + 1) % 4],
                cells=(("band", cid), ("sheet", band.sector_faces[s], ONLY)),
            ))
        for fam, pos in (("A", band.a_rays), ("B", band.b_rays)):
            edges.append(_LiftedEdge(
                key=("diam", cid, fam), boundary=True, family=fam,
                v0=clip[pos[0]], v1=clip[pos[1]],
                cells=(("band", cid),),
            ))

    c._cells = cells
    # Euler weight per 2-cell: a band quad is a disk (+1); a sheet over a
    # face with holes contributes chi(face) relative to its boundary,
    # i.e. 1 - holes (faces of arrangements with nested curves need not
    # be disks)
    weights = {}
    for s in c.sheets:
        loops = len(arr.face(s.face_id).boundary_loops)
        weights[("sheet",) + s.key] = 2 - loops
    for cid in c.bands:
        weights[("band", cid)] = 1
    c._cell_weight = weights
    c._edges = edges
    c._vertices = {e.v0 for e in edges} | {e.v1 for e in edges}

    # components by union-find over 2-cells through interior lifted edges
    parent = {k: k for k in cells}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        roots = [find(k) for k in e.cells]
        for r in roots[1:]:
            if r != roots[0]:
                parent[r] = roots[0]
    comp_index: dict[tuple, int] = {}
    for k in cells:
        r = find(k)
        if r not in comp_index:
            comp_index[r] = len(comp_index)
    c._comp_of_cell = {k: comp_index[find(k)] for k in cells}
    c.n_components = len(comp_index)


def _verify_sheet_sides(c: SheetComplex) -> None:
    """Every (sheet, incident arrangement edge) pair must be covered by
    exactly one lifted edge cell."""
    arr = c.arrangement
    expected: set[tuple] = set()
    for s in c.sheets:
        face = arr.face(s.face_id)
        for loop in face.boundary_loops:
            for he in loop:
                expected.add((s.key, arr.he_edge(he).id))
    covered: list[tuple] = []
    for e in c._edges:
        if e.key[0] in ("arc", "arc_cont", "arc_end"):
            for cell in e.cells:
                covered.append(((cell[1], cell[2]), e.key[1]))
    if sorted(expected) != sorted(covered):
        raise ConsistencyError("seam bookkeeping inconsistency: sheet sides "
                               "not covered exactly once")


def cw_euler_characteristic(c: SheetComplex) -> int:
    """V - E + F of the lifted cell decomposition (bands as quads).
    Independent of the (v1 + 2 v2) - (e1 + 2 e2) + (f1 + 2 f2) formula."""
    nv, ne, nf = c.cell_counts()
    return nv - ne + nf


def genus_and_boundaries(c: SheetComplex) -> list[dict]:
    """Per-component topology: {component, chi, boundary_loops, genus}.
    Sheets are graphs, so every component is orientable and
    genus = (2 - chi - boundary_loops) / 2."""
    comp_of_edge = {}
    for e in c._edges:
        comp_of_edge[e.key] = c._comp_of_cell[e.cells[0]]
    comp_of_vertex: dict[tuple, int] = {}
    for e in c._edges:
        for vtx in (e.v0, e.v1):
            prev = comp_of_vertex.setdefault(vtx, comp_of_edge[e.key])
            if prev != comp_of_edge[e.key]:
                raise ConsistencyError(
                    f"lifted vertex {vtx} is shared between components"
                )

    chi = [0] * c.n_components
    for k in c._cells:
        chi[c._comp_of_cell[k]] += c._cell_weight[k]
    for e in c._edges:
        chi[comp_of_edge[e.key]] -= 1
    for vtx, comp in comp_of_vertex.items():
        chi[comp] += 1

    # boundary loops: walk boundary lifted edges through shared vertices
    incident: dict[tuple, list[int]] = {}
    bnd = [e for e in c._edges if e.boundary]
    for i, e in enumerate(bnd):
        incident.setdefault(e.v0, []).append(i)
        incident.setdefault(e.v1, []).append(i)
    for vtx, inc in incident.items():
        if len(inc) != 2 and not (len(inc) == 1 and bnd[inc[0]].v0 == bnd[inc[0]].v1):
            raise ConsistencyError(
                f"boundary is not a 1-manifold at lifted vertex {vtx}"
            )
    loops = [0] * c.n_components
    seen = [False] * len(bnd)
    for i in range(len(bnd)):
        if seen[i]:
            continue
        loops[comp_of_edge[bnd[i].key]] += 1
        seen[i] = True
        if bnd[i].v0 == bnd[i].v1:
            continue
        start, at = bnd[i].v0, bnd[i].v1
        while at != start:
            cand = [j for j in incident[at] if not seen[j]]
            if len(cand) != 1:
                raise ConsistencyError("open boundary chain in sheet complex")
            j = cand[0]
            seen[j] = True
            at = bnd[j].v1 if bnd[j].v0 == at else bnd[j].v0

    out = []
    for comp in range(c.n_components):
        g2 = 2 - chi[comp] - loops[comp]
        if g2 % 2 != 0 or g2 < 0:
            raise ConsistencyError(
                f"component {comp}: non-integer or negative genus from "
                f"chi={chi[comp]}, boundary loops={loops[comp]}"
            )
        out.append({
            "component": comp,
            "chi": chi[comp],
            "boundary_loops": loops[comp],
            "genus": g2 // 2,
        })
    return out
