"""Curve ingestion: two tagged families of closed planar polylines.

Family A lives in the plane z=0; family B is lifted to z=t downstream.
Parametric circle/ellipse entries are sampled into polylines here, so the
rest of the pipeline only ever sees polylines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geom
from .errors import GeometryError, InputError

DEFAULT_SAMPLES = 256


@dataclass(frozen=True)
class Tolerances:
    theta_min: float = 1e-3        # transversality band [theta_min, pi - theta_min]
    eps_geo_factor: float = 1e-9   # coincidence epsilon = factor * bbox diagonal
    max_crossings: int = 10000

    def as_dict(self) -> dict:
        return {
            "theta_min": self.theta_min,
            "eps_geo_factor": self.eps_geo_factor,
            "max_crossings": self.max_crossings,
        }


@dataclass(frozen=True)
class JordanCurve:
    """A simple closed polyline.  Points are CCW and do not repeat the
    first point; segment i joins point i to point (i+1) % n."""

    id: str
    family: str                    # "A" or "B"
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))

    @property
    def n(self) -> int:
        return len(self.points)

    def arc_lengths(self) -> np.ndarray:
        return geom.arc_lengths(self.points, closed=True)

    def perimeter(self) -> float:
        return float(self.arc_lengths()[-1])


@dataclass(frozen=True)
class CurveSet:
    curves: tuple[JordanCurve, ...]
    tolerances: Tolerances = Tolerances()

    def family(self, fam: str) -> list[JordanCurve]:
        return [c for c in self.curves if c.family == fam]

    @property
    def diameter(self) -> float:
        return geom.bbox_diagonal([c.points for c in self.curves])

    @property
    def eps_geo(self) -> float:
        return self.tolerances.eps_geo_factor * self.diameter

    def by_id(self, cid: str) -> JordanCurve:
        for c in self.curves:
            if c.id == cid:
                return c
        raise KeyError(cid)


def _sample_entry(entry: dict, fam: str, index: int) -> JordanCurve:
    if not isinstance(entry, dict):
        raise InputError(f"curve entry {fam}{index}: expected an object")
    cid = entry.get("id", f"{fam.lower()}{index}")
    keys = {"points", "circle", "ellipse"} & set(entry)
    if len(keys) != 1:
        raise InputError(
            f"curve {cid}: exactly one of 'points', 'circle', 'ellipse' required"
        )
    kind = keys.pop()
    if kind == "points":
        pts = np.asarray(entry["points"], dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InputError(f"curve {cid}: points must be a list of [x, y] pairs")
    elif kind == "circle":
        spec = entry["circle"]
        try:
            pts = geom.circle_points(
                spec["center"], float(spec["r"]), int(spec.get("samples", DEFAULT_SAMPLES)),
                phase=float(spec.get("phase", 0.0)),
            )
        except KeyError as exc:
            raise InputError(f"curve {cid}: circle needs 'center' and 'r'") from exc
    else:
        spec = entry["ellipse"]
        try:
            pts = geom.ellipse_points(
                spec["center"], float(spec["rx"]), float(spec["ry"]),
                int(spec.get("samples", DEFAULT_SAMPLES)),
                rotation=np.deg2rad(float(spec.get("rotation", 0.0))),
            )
        except KeyError as exc:
            raise InputError(f"curve {cid}: ellipse needs 'center', 'rx', 'ry'") from exc
    return JordanCurve(id=cid, family=fam, points=pts)


def _normalize(curve: JordanCurve, eps: float) -> JordanCurve:
    pts = curve.points
    # drop an explicit closing point and collapse consecutive duplicates
    if len(pts) > 1 and np.linalg.norm(pts[0] - pts[-1]) <= eps:
        pts = pts[:-1]
    keep = [0]
    for i in range(1, len(pts)):
        if np.linalg.norm(pts[i] - pts[keep[-1]]) > eps:
            keep.append(i)
    pts = pts[keep]
    if len(pts) < 3:
        raise InputError(f"curve {curve.id}: open polyline (fewer than 3 distinct points)")
    area = geom.signed_area(pts)
    if abs(area) <= eps * eps:
        raise InputError(f"curve {curve.id}: degenerate polyline (zero enclosed area)")
    if area < 0:
        pts = pts[::-1].copy()
    return JordanCurve(id=curve.id, family=curve.family, points=pts)


def _self_intersections(points: np.ndarray, eps: float) -> bool:
    """True if any two non-adjacent segments of the closed polyline cross
    or pass within eps of each other."""
    n = len(points)
    a, b = geom.polyline_segments(points, closed=True)
    ia, ib, _, _, _ = geom.segment_pair_intersections(a, b, a, b)
    for i, j in zip(ia, ib):
        if i == j:
            continue
        if (i - j) % n == 1 or (j - i) % n == 1:
            continue  # shared polyline vertex
        return True
    # proximity without proper crossing (vertex touching / near-tangency)
    lo = np.minimum(a, b) - eps
    hi = np.maximum(a, b) + eps
    overlap = (
        (lo[:, None, 0] <= hi[None, :, 0]) & (lo[None, :, 0] <= hi[:, None, 0])
        & (lo[:, None, 1] <= hi[None, :, 1]) & (lo[None, :, 1] <= hi[:, None, 1])
    )
    ci, cj = np.nonzero(overlap)
    for i, j in zip(ci, cj):
        if i >= j or (i - j) % n == 1 or (j - i) % n == 1:
            continue
        if geom.segment_distance(a[i], b[i], a[j], b[j]) < eps:
            return True
    return False


def _families_disjoint(c1: JordanCurve, c2: JordanCurve, eps: float) -> bool:
    a0, a1 = geom.polyline_segments(c1.points, closed=True)
    b0, b1 = geom.polyline_segments(c2.points, closed=True)
    ia, _, _, _, _ = geom.segment_pair_intersections(a0, a1, b0, b1)
    if len(ia):
        return False
    # bbox prefilter, then exact distance for near pairs
    lo1 = np.minimum(a0, a1) - eps
    hi1 = np.maximum(a0, a1) + eps
    lo2 = np.minimum(b0, b1)
    hi2 = np.maximum(b0, b1)
    overlap = (
        (lo1[:, None, 0] <= hi2[None, :, 0]) & (lo2[None, :, 0] <= hi1[:, None, 0])
        & (lo1[:, None, 1] <= hi2[None, :, 1]) & (lo2[None, :, 1] <= hi1[:, None, 1])
    )
    ci, cj = np.nonzero(overlap)
    for i, j in zip(ci, cj):
        if geom.segment_distance(a0[i], a1[i], b0[j], b1[j]) < eps:
            return False
    return True


def load_curve_set(document, tolerances: Tolerances | None = None) -> CurveSet:
    """Build and validate a CurveSet from a config document.

    `document` may be a dict, a JSON string, or a path to a JSON file
    with top-level fields `curves_a` and `curves_b`.
    """
    if isinstance(document, (str, Path)):
        p = Path(document)
        try:
            text = p.read_text() if p.exists() else str(document)
        except OSError as exc:
            raise InputError(f"cannot read config: {exc}") from exc
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed config document: {exc}") from exc
    if not isinstance(document, dict):
        raise InputError("config document must be a JSON object")

    raw: list[JordanCurve] = []
    for fam, key in (("A", "curves_a"), ("B", "curves_b")):
        entries = document.get(key, [])
        if not isinstance(entries, list):
            raise InputError(f"'{key}' must be a list")
        for i, entry in enumerate(entries):
            raw.append(_sample_entry(entry, fam, i))
    if not raw:
        raise InputError("no curves: need at least one entry in curves_a or curves_b")
    ids = [c.id for c in raw]
    if len(set(ids)) != len(ids):
        raise InputError("duplicate curve ids")

    diag = geom.bbox_diagonal([c.points for c in raw])
    tol = tolerances or Tolerances()
    eps = tol.eps_geo_factor * diag

    curves = [_normalize(c, eps) for c in raw]
    for c in curves:
        if _self_intersections(c.points, eps):
            raise GeometryError(f"curve {c.id}: self-intersecting polyline")
    for fam in ("A", "B"):
        fam_curves = [c for c in curves if c.family == fam]
        for i in range(len(fam_curves)):
            for j in range(i + 1, len(fam_curves)):
                if not _families_disjoint(fam_curves[i], fam_curves[j], eps):
                    raise GeometryError(
                        f"intra-family intersection: curves {fam_curves[i].id} "
                        f"and {fam_curves[j].id} (family {fam}) are not disjoint"
                    )
    return CurveSet(curves=tuple(curves), tolerances=tol)
