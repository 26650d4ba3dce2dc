"""Low-level planar geometry: vectorized segment intersection, polyline
utilities, point-in-polygon tests.

Polylines are float64 arrays of shape (n, 2).  Closed polylines do not
repeat their first point; segment i runs from point i to point (i+1) % n.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def polyline_segments(points: np.ndarray, closed: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Return (starts, ends) arrays for the segments of a polyline."""
    pts = np.asarray(points, dtype=float)
    if closed:
        return pts, np.roll(pts, -1, axis=0)
    return pts[:-1], pts[1:]


def signed_area(points: np.ndarray) -> float:
    """Shoelace area of a closed polyline (positive for CCW)."""
    p = np.asarray(points, dtype=float)
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


def arc_lengths(points: np.ndarray, closed: bool = True) -> np.ndarray:
    """Cumulative arc length at each point; for closed polylines the last
    entry is the total perimeter (length n+1)."""
    a, b = polyline_segments(points, closed)
    seg = np.linalg.norm(b - a, axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def segment_pair_intersections(a0, a1, b0, b1, eps_parallel: float = 1e-14):
    """All proper intersections between two segment families.

    a0, a1: (na, 2) segment endpoints; b0, b1: (nb, 2).  Returns
    (ia, ib, s, u, points) for pairs with a proper crossing at parameters
    s in [0, 1) on segment ia and u in [0, 1) on segment ib.  The
    half-open convention means an intersection exactly at a polyline
    vertex is reported once, by the segment that starts there.
    """
    a0 = np.asarray(a0, float)[:, None, :]
    a1 = np.asarray(a1, float)[:, None, :]
    b0 = np.asarray(b0, float)[None, :, :]
    b1 = np.asarray(b1, float)[None, :, :]
    d1 = a1 - a0
    d2 = b1 - b0
    denom = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
    rhs = b0 - a0
    scale = np.linalg.norm(d1, axis=-1) * np.linalg.norm(d2, axis=-1)
    ok = np.abs(denom) > eps_parallel * np.maximum(scale, 1e-300)
    denom_safe = np.where(ok, denom, 1.0)
    s = (rhs[..., 0] * d2[..., 1] - rhs[..., 1] * d2[..., 0]) / denom_safe
    u = (rhs[..., 0] * d1[..., 1] - rhs[..., 1] * d1[..., 0]) / denom_safe
    hit = ok & (s >= 0.0) & (s < 1.0) & (u >= 0.0) & (u < 1.0)
    ia, ib = np.nonzero(hit)
    pts = a0[ia, 0] + s[ia, ib, None] * d1[ia, 0]
    return ia, ib, s[ia, ib], u[ia, ib], pts


def segment_distance(p0, p1, q0, q1) -> float:
    """Minimum distance between two closed segments."""

    def point_seg(p, a, b):
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
        return float(np.linalg.norm(p - (a + t * ab)))

    p0, p1, q0, q1 = (np.asarray(v, float) for v in (p0, p1, q0, q1))
    d1 = p1 - p0
    d2 = q1 - q0
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) > 1e-14 * max(np.linalg.norm(d1) * np.linalg.norm(d2), 1e-300):
        rhs = q0 - p0
        s = (rhs[0] * d2[1] - rhs[1] * d2[0]) / denom
        u = (rhs[0] * d1[1] - rhs[1] * d1[0]) / denom
        if 0.0 <= s <= 1.0 and 0.0 <= u <= 1.0:
            return 0.0
    return min(
        point_seg(p0, q0, q1),
        point_seg(p1, q0, q1),
        point_seg(q0, p0, p1),
        point_seg(q1, p0, p1),
    )


def crossing_angle(d1, d2) -> float:
    """Angle in (0, pi) between two direction vectors."""
    d1 = np.asarray(d1, float)
    d2 = np.asarray(d2, float)
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    dot = float(d1 @ d2)
    ang = float(np.arctan2(abs(cross), dot))
    return ang


def point_in_polyline(point, points: np.ndarray) -> bool:
    """Even-odd (crossing parity) test for a closed polyline."""
    x, y = float(point[0]), float(point[1])
    p = np.asarray(points, float)
    q = np.roll(p, -1, axis=0)
    y0, y1 = p[:, 1], q[:, 1]
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = p[:, 0] + (y - y0) / (y1 - y0) * (q[:, 0] - p[:, 0])
    return bool(np.sum(straddle & (xs > x)) % 2)


def winding_number(point, points: np.ndarray) -> int:
    """Winding number via angle summation.  Independent of
    point_in_polyline; used as a cross-check oracle."""
    p = np.asarray(points, float) - np.asarray(point, float)
    ang = np.arctan2(p[:, 1], p[:, 0])
    dang = np.diff(np.concatenate([ang, ang[:1]]))
    dang = (dang + np.pi) % TWO_PI - np.pi
    return int(round(float(np.sum(dang)) / TWO_PI))


def resample_polyline(points: np.ndarray, spacing: float, closed: bool = False) -> np.ndarray:
    """Resample a polyline at roughly uniform arc-length spacing.

    The output points lie exactly on the input polyline (linear
    interpolation along its segments) and include both endpoints (for
    open polylines) or the start point (closed).
    """
    pts = np.asarray(points, dtype=float)
    cum = arc_lengths(pts, closed)
    total = cum[-1]
    if total <= 0.0:
        return pts[:1].copy()
    n = max(1, int(np.ceil(total / spacing)))
    targets = np.linspace(0.0, total, n + 1)
    if closed:
        targets = targets[:-1]
    chain = np.vstack([pts, pts[:1]]) if closed else pts
    xs = np.interp(targets, cum, chain[:, 0])
    ys = np.interp(targets, cum, chain[:, 1])
    return np.column_stack([xs, ys])


def point_on_polyline_at(points: np.ndarray, cum: np.ndarray, s: float, closed: bool = True) -> np.ndarray:
    """Point at arc-length parameter s along the polyline."""
    chain = np.vstack([points, points[:1]]) if closed else np.asarray(points, float)
    x = np.interp(s, cum, chain[:, 0])
    y = np.interp(s, cum, chain[:, 1])
    return np.array([x, y])


def circle_points(center, r: float, samples: int, phase: float = 0.0) -> np.ndarray:
    """Closed polyline approximating a circle (CCW)."""
    th = phase + TWO_PI * np.arange(samples) / samples
    cx, cy = center
    return np.column_stack([cx + r * np.cos(th), cy + r * np.sin(th)])


def ellipse_points(center, rx: float, ry: float, samples: int, rotation: float = 0.0) -> np.ndarray:
    """Closed polyline approximating an ellipse; rotation in radians."""
    th = TWO_PI * np.arange(samples) / samples
    x = rx * np.cos(th)
    y = ry * np.sin(th)
    c, s = np.cos(rotation), np.sin(rotation)
    cx, cy = center
    return np.column_stack([cx + c * x - s * y, cy + s * x + c * y])


def bbox_diagonal(point_sets) -> float:
    """Diagonal of the joint bounding box of several point arrays."""
    allp = np.vstack([np.asarray(p, float) for p in point_sets])
    lo = allp.min(axis=0)
    hi = allp.max(axis=0)
    return float(np.linalg.norm(hi - lo))


def segment_circle_exit(p0, p1, center, radius: float):
    """First parameter t in [0, 1] where segment p0->p1 crosses the circle
    boundary going from inside (|p0-c| < r) to outside.  Returns None if
    the segment stays inside."""
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    c = np.asarray(center, float)
    d = p1 - p0
    f = p0 - c
    a = float(d @ d)
    if a == 0.0:
        return None
    b = 2.0 * float(f @ d)
    cc = float(f @ f) - radius * radius
    disc = b * b - 4.0 * a * cc
    if disc < 0.0:
        return None
    sq = float(np.sqrt(disc))
    for t in sorted(((-b - sq) / (2 * a), (-b + sq) / (2 * a))):
        if 0.0 <= t <= 1.0 and float(np.linalg.norm(p0 + t * d - c)) >= radius - 1e-15:
            # want the crossing where we leave the disk
            if float(np.linalg.norm(p1 - c)) >= radius or t > 0.0:
                return float(t)
    return None


def min_polyline_angle_gap(dirs: np.ndarray) -> float:
    """Smallest cyclic gap between a set of direction angles (radians)."""
    ang = np.sort(np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), TWO_PI))
    if len(ang) < 2:
        return TWO_PI
    gaps = np.diff(np.concatenate([ang, [ang[0] + TWO_PI]]))
    return float(gaps.min())
