"""Admissible multiplicity assignments over an arrangement.

A varifold assigns 0, 1 or 2 to every face so that the multiplicity jumps
by exactly one across every edge, the unbounded face carries 0, and every
crossing sees at least one zero among its four sectors.  PLUS faces are
forced to 1 and bounded MINUS faces choose between 0 and 2, so
enumeration backtracks only over the MINUS faces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arrangement import (
    INSIDE_BOTH,
    MINUS,
    OUTSIDE_BOTH,
    PLUS,
    Arrangement,
    ArrEdge,
    CrossingPoint,
)
from .errors import ConsistencyError, GeometryError

HELICOIDAL = "HELICOIDAL"      # cyclic multiplicities (0,1,0,1)
DOUBLE_GRAPH = "DOUBLE_GRAPH"  # cyclic multiplicities (0,1,2,1)

# alias so callers can name the pair
CrossingType = str

ORACLE_FACE_LIMIT = 16


@dataclass(frozen=True)
class Varifold:
    arrangement: Arrangement = field(repr=False)
    multiplicities: dict[str, int] = field(repr=False)

    def m(self, face_id: str) -> int:
        return self.multiplicities[face_id]

    def vector(self) -> tuple[int, ...]:
        """Multiplicities in face-id construction order (canonical key)."""
        return tuple(self.multiplicities[f.id] for f in self.arrangement.faces)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Varifold)
            and self.arrangement is other.arrangement
            and self.multiplicities == other.multiplicities
        )

    def __hash__(self) -> int:
        return hash(self.vector())

    def validate(self) -> None:
        arr = self.arrangement
        m = self.multiplicities
        if m[arr.unbounded_face.id] != 0:
            raise ConsistencyError("unbounded face must have multiplicity 0")
        for f in arr.faces:
            if m[f.id] not in (0, 1, 2):
                raise ConsistencyError(f"face {f.id}: multiplicity {m[f.id]} out of range")
            if f.sign == PLUS and m[f.id] != 1:
                raise ConsistencyError(f"PLUS face {f.id} must carry multiplicity 1")
            if f.sign == MINUS and m[f.id] == 1:
                raise ConsistencyError(f"MINUS face {f.id} cannot carry multiplicity 1")
        for e in arr.edges:
            if abs(m[e.left_face] - m[e.right_face]) != 1:
                raise ConsistencyError(
                    f"edge {e.id}: multiplicities must differ by one"
                )
        for cid, sector in arr.crossing_sectors.items():
            if all(m[fid] > 0 for fid in sector):
                raise ConsistencyError(f"crossing {cid}: no zero-multiplicity sector")


def _base_assignment(arr: Arrangement) -> dict[str, int]:
    base = {}
    for f in arr.faces:
        base[f.id] = 0 if f.sign == MINUS else 1
    return base


def _minus_constraints(arr: Arrangement):
    """Per bounded MINUS face: the bounded MINUS faces it must not share a
    crossing with at multiplicity 2, plus self-capped faces."""
    minus_ids = [f.id for f in arr.bounded_faces if f.sign == MINUS]
    partners: dict[str, set[str]] = {fid: set() for fid in minus_ids}
    forced_zero: set[str] = set()
    unb = arr.unbounded_face.id
    for sector in arr.crossing_sectors.values():
        ms = [fid for fid in sector if arr.face(fid).sign == MINUS]
        ms = [fid for fid in ms if fid != unb]
        if len(ms) == 2:
            a, b = ms
            if a == b:
                forced_zero.add(a)  # both zero sectors are this face
            else:
                partners[a].add(b)
                partners[b].add(a)
    return minus_ids, partners, forced_zero


def enumerate_varifolds(arr: Arrangement) -> list[Varifold]:
    """All admissible varifolds, canonically ordered.

    PLUS faces are fixed at 1 and the unbounded face at 0; the search
    backtracks over bounded MINUS faces in decreasing constraint-degree
    order, choosing 0 or 2 and forward-checking the crossing constraint.
    """
    minus_ids, partners, forced_zero = _minus_constraints(arr)
    order = sorted(minus_ids, key=lambda fid: (-len(partners[fid]), fid))
    base = _base_assignment(arr)
    results: list[dict[str, int]] = []
    chosen: dict[str, int] = {}

    def backtrack(k: int) -> None:
        if k == len(order):
            results.append(dict(chosen))
            return
        fid = order[k]
        for val in (0, 2):
            if val == 2:
                if fid in forced_zero:
                    continue
                if any(chosen.get(p) == 2 for p in partners[fid]):
                    continue
            chosen[fid] = val
            backtrack(k + 1)
        del chosen[fid]

    backtrack(0)
    out = []
    for res in results:
        m = dict(base)
        m.update(res)
        v = Varifold(arrangement=arr, multiplicities=m)
        v.validate()
        out.append(v)
    out.sort(key=lambda v: v.vector())
    if not out:
        raise ConsistencyError("admissible set is empty; enumeration bug")
    return out


def brute_force_enumerate(arr: Arrangement) -> list[Varifold]:
    """Exhaustive oracle: test every assignment in {0,1,2}^bounded against
    the first-principles constraints (unbounded 0, difference one across
    every edge, a zero sector at every crossing).  The PLUS=1 / MINUS in
    {0,2} structure is not assumed; it must emerge."""
    bounded = arr.bounded_faces
    k = len(bounded)
    if k > ORACLE_FACE_LIMIT:
        raise GeometryError(
            f"{k} bounded faces exceed the brute-force oracle limit {ORACLE_FACE_LIMIT}"
        )
    idx = {f.id: i for i, f in enumerate(bounded)}
    unb = arr.unbounded_face.id

    edge_pairs = []
    edge_unbounded = []
    for e in arr.edges:
        fl, fr = e.left_face, e.right_face
        if fl == unb and fr == unb:
            raise ConsistencyError(f"edge {e.id} borders the unbounded face twice")
        if fl == unb:
            edge_unbounded.append(idx[fr])
        elif fr == unb:
            edge_unbounded.append(idx[fl])
        else:
            edge_pairs.append((idx[fl], idx[fr]))
    sectors = []
    for sector in arr.crossing_sectors.values():
        sectors.append([idx[fid] if fid != unb else -1 for fid in sector])

    total = 3 ** k
    found: list[Varifold] = []
    chunk = 1 << 18
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        m = np.empty((len(codes), k), dtype=np.int8)
        c = codes.copy()
        for j in range(k):
            m[:, j] = c % 3
            c //= 3
        ok = np.ones(len(codes), dtype=bool)
        for i in edge_unbounded:
            ok &= m[:, i] == 1
        for i, j in edge_pairs:
            ok &= np.abs(m[:, i] - m[:, j]) == 1
        for sec in sectors:
            vals = [m[:, i] if i >= 0 else np.zeros(len(codes), np.int8) for i in sec]
            ok &= (vals[0] == 0) | (vals[1] == 0) | (vals[2] == 0) | (vals[3] == 0)
        for row in m[ok]:
            mult = {f.id: int(row[idx[f.id]]) for f in bounded}
            mult[unb] = 0
            found.append(Varifold(arrangement=arr, multiplicities=mult))
    found.sort(key=lambda v: v.vector())
    return found


def classify_crossing(v: Varifold, crossing: CrossingPoint) -> CrossingType:
    """(0,1,0,1) -> HELICOIDAL; any rotation of (0,1,2,1) -> DOUBLE_GRAPH."""
    sector = v.arrangement.crossing_sectors[crossing.id]
    ms = [v.m(fid) for fid in sector]
    if sorted(ms) == [0, 0, 1, 1] and ms[0] == ms[2] and ms[1] == ms[3]:
        return HELICOIDAL
    if sorted(ms) == [0, 1, 1, 2] and ({ms[0], ms[2]} == {0, 2} or {ms[1], ms[3]} == {0, 2}):
        return DOUBLE_GRAPH
    raise ConsistencyError(
        f"crossing {crossing.id}: cyclic multiplicities {tuple(ms)} are neither "
        f"(0,1,0,1) nor a rotation of (0,1,2,1); enumeration bug"
    )


def edge_multiplicity(v: Varifold, edge: ArrEdge) -> int:
    """Multiplicity of the lifted arc: max of the two incident faces
    (1 for a 0|1 edge, 2 for a 1|2 edge)."""
    return max(v.m(edge.left_face), v.m(edge.right_face))


@dataclass(frozen=True)
class VarifoldStats:
    v1: int
    v2: int
    e1: int
    e2: int
    f1: int
    f2: int
    chi: int
    area: float
    fi_minus: int
    fo_minus: int

    def as_dict(self) -> dict:
        return {
            "v1": self.v1, "v2": self.v2, "e1": self.e1, "e2": self.e2,
            "f1": self.f1, "f2": self.f2, "chi": self.chi, "area": self.area,
            "fi_minus": self.fi_minus, "fo_minus": self.fo_minus,
        }


def minus_face_counts(arr: Arrangement) -> tuple[int, int]:
    """(f^i_-, f^o_-): bounded MINUS faces inside Region(A) cap Region(B)
    and outside Region(A) cup Region(B)."""
    fi = sum(1 for f in arr.bounded_faces if f.sign == MINUS and f.region_class == INSIDE_BOTH)
    fo = sum(1 for f in arr.bounded_faces if f.sign == MINUS and f.region_class == OUTSIDE_BOTH)
    return fi, fo


def compute_stats(v: Varifold) -> VarifoldStats:
    """Cell counts and the Euler characteristic of the predicted surface:
    chi = (v1 + 2 v2) - (e1 + 2 e2) + (f1 + 2 f2), with two corrections
    that vanish on the standard configurations: synthetic vertices enter
    the vertex count at the multiplicity of their carrying loop edge
    (cancelling against the edge count), and a face with holes (nested
    curves) contributes 1 - holes per sheet instead of 1, since such a
    face is not a disk cell."""
    arr = v.arrangement
    v1 = v2 = 0
    for c in arr.crossings:
        if classify_crossing(v, c) == HELICOIDAL:
            v1 += 1
        else:
            v2 += 1
    e1 = e2 = 0
    syn_vertex_lift = 0
    for e in arr.edges:
        mult = edge_multiplicity(v, e)
        if mult == 1:
            e1 += 1
        else:
            e2 += 1
        if e.source in arr.synthetic_vertices and e.source == e.target:
            syn_vertex_lift += mult
    f1 = sum(1 for f in arr.faces if v.m(f.id) == 1)
    f2 = sum(1 for f in arr.faces if v.m(f.id) == 2)
    hole_correction = sum(
        v.m(f.id) * (len(f.boundary_loops) - 1)
        for f in arr.bounded_faces if v.m(f.id) > 0
    )
    chi = ((v1 + 2 * v2 + syn_vertex_lift) - (e1 + 2 * e2)
           + (f1 + 2 * f2) - hole_correction)
    area = sum(v.m(f.id) * f.area for f in arr.bounded_faces)
    fi, fo = minus_face_counts(arr)
    return VarifoldStats(v1=v1, v2=v2, e1=e1, e2=e2, f1=f1, f2=f2,
                         chi=chi, area=float(area), fi_minus=fi, fo_minus=fo)


def least_area_varifold(vs: list[Varifold]) -> Varifold:
    """The unique assignment with no multiplicity-2 face.  Asserts that it
    strictly minimizes flat area and maximizes total genus over the
    enumerated set."""
    if not vs:
        raise ValueError("empty varifold sequence")
    arr = vs[0].arrangement
    flat = [v for v in vs if all(v.m(f.id) != 2 for f in arr.faces)]
    if len(flat) != 1:
        raise ConsistencyError(
            f"expected exactly one f2=0 varifold, found {len(flat)}"
        )
    v0 = flat[0]
    stats0 = compute_stats(v0)
    from .sheets import build_complex, genus_and_boundaries  # cycle with sheets

    genus0 = sum(r["genus"] for r in genus_and_boundaries(build_complex(arr, v0)))
    for v in vs:
        if v == v0:
            continue
        s = compute_stats(v)
        if not stats0.area < s.area:
            raise ConsistencyError("least-area varifold is not the strict area minimizer")
        g = sum(r["genus"] for r in genus_and_boundaries(build_complex(arr, v)))
        if genus0 < g:
            raise ConsistencyError("least-area varifold does not have maximal genus")
    return v0


def upper_bound(arr: Arrangement) -> int:
    """Counting bound 2^(f^i_-) + 2^(f^o_-)."""
    fi, fo = minus_face_counts(arr)
    return 2 ** fi + 2 ** fo
