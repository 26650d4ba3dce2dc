"""Damped mean-curvature descent to a discrete minimal surface, plus the
post-relaxation geometric checks: almost-vertical normals away from the
crossings, helicoid fit inside the crossing cylinders, and the two-graph
separation over multiplicity-2 faces."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import LinearNDInterpolator

from .discrete import (
    corner_cotangents,
    laplace_coordinates,
    mixed_voronoi_areas,
    triangle_areas,
    vertex_normals,
)
from .errors import GeometryError
from .trimesh import TriMesh


def _scalar_laplacian_apply(cots, T, n, x):
    y = np.zeros(n)
    for k in range(3):
        i = T[:, (k + 1) % 3]
        j = T[:, (k + 2) % 3]
        diff = 0.5 * cots[:, k] * (x[i] - x[j])
        y += np.bincount(i, weights=diff, minlength=n)
        y -= np.bincount(j, weights=diff, minlength=n)
    return y


def _stable_step_factor(V, T, wsum, interior) -> float:
    """Largest eigenvalue of the diagonally preconditioned Laplacian
    restricted to interior vertices, by deterministic power iteration;
    the averaging step is contractive for omega < 2 / mu_max."""
    n = len(V)
    cots = corner_cotangents(V, T)
    x = np.zeros(n)
    idx = np.nonzero(interior)[0]
    x[idx] = np.where(idx % 2 == 0, 1.0, -1.0)
    d = np.maximum(wsum, 1e-30)
    mu = 1.0
    for _ in range(50):
        x /= max(np.sqrt(float(x @ (d * x))), 1e-300)
        y = _scalar_laplacian_apply(cots, T, n, x)
        y[~interior] = 0.0
        mu = float(x @ y)  # Rayleigh quotient in the D inner product
        x = y / d
    return min(1.0, 1.8 / (1.15 * max(mu, 1e-30)))


@dataclass
class RelaxReport:
    iterations: int
    converged: bool
    final_residual: float
    tol_H: float
    area_history: list[float] = field(default_factory=list)
    residual_history: list[float] = field(default_factory=list)
    graph_check: dict | None = None
    helicoid_fits: dict | None = None

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_residual": self.final_residual,
            "tol_H": self.tol_H,
            "initial_area": self.area_history[0] if self.area_history else None,
            "final_area": self.area_history[-1] if self.area_history else None,
            "graph_check": self.graph_check,
            "helicoid_fits": self.helicoid_fits,
        }


def mean_curvature_residual(mesh: TriMesh) -> np.ndarray:
    """Per-vertex discrete mean curvature |<K_i, n_i>| / (2 A_i) (zero on
    the boundary), in 1/length units: the normal component of the
    cotangent area-gradient vector; the tangential part is
    discretization error, not curvature."""
    K, _ = laplace_coordinates(mesh.vertices, mesh.triangles)
    areas = mixed_voronoi_areas(mesh.vertices, mesh.triangles)
    nrm = vertex_normals(mesh.vertices, mesh.triangles)
    res = np.abs(np.einsum("ij,ij->i", K, nrm)) / np.maximum(2.0 * areas, 1e-300)
    res[mesh.boundary_vertex_mask()] = 0.0
    return res


def relax(mesh: TriMesh, tol_H: float, max_iters: int = 20000,
          step_h: float | None = None) -> tuple[TriMesh, RelaxReport]:
    """Drive interior vertices along the cotangent mean-curvature
    direction with a backtracking line search on total area.  Boundary
    vertices never move; the area history is non-increasing by
    construction."""
    out = mesh.copy()
    V = out.vertices
    T = out.triangles
    boundary = out.boundary_vertex_mask()
    interior = ~boundary
    if step_h is None:
        e = V[T[:, 0]] - V[T[:, 1]]
        step_h = float(np.median(np.linalg.norm(e, axis=1)))
    max_step = 0.25 * step_h

    tri_areas = triangle_areas(V, T)
    area = float(tri_areas.sum())
    report = RelaxReport(iterations=0, converged=False, final_residual=np.inf,
                         tol_H=tol_H, area_history=[area], residual_history=[])

    if not interior.any():
        report.converged = True
        report.final_residual = 0.0
        return out, report

    omega = None
    for it in range(max_iters):
        K, wsum = laplace_coordinates(V, T)
        areas_v = mixed_voronoi_areas(V, T)
        nrm = vertex_normals(V, T)
        Kn = np.einsum("ij,ij->i", K, nrm)
        res_vec = np.abs(Kn) / np.maximum(2.0 * areas_v, 1e-300)
        res_vec[boundary] = 0.0
        res = float(res_vec.max())
        report.residual_history.append(res)
        report.final_residual = res
        if res <= tol_H:
            report.converged = True
            break
        if omega is None or it % 300 == 0:
            omega = _stable_step_factor(V, T, wsum, interior)

        # damped, diagonally preconditioned descent along the vertex
        # normal (the mean-curvature direction); tangential motion only
        # degrades the mesh without changing the surface.  Cap each
        # displacement at 0.25 h.
        wfloor = 1e-8 * max(float(np.median(wsum[interior])), 1e-30)
        d = (-omega * Kn / np.maximum(wsum, wfloor))[:, None] * nrm
        d[boundary] = 0.0
        ln = np.linalg.norm(d, axis=1)
        over = ln > max_step
        if over.any():
            d[over] *= (max_step / ln[over])[:, None]
        if float(ln.max(initial=0.0)) <= 0.0:
            report.converged = res <= tol_H
            break
        s = 1.0
        accepted = False
        floor = 0.05 * tri_areas
        for _ in range(40):
            Vn = V + s * d
            ta = triangle_areas(Vn, T)
            new_area = float(ta.sum())
            if new_area <= area and np.all(ta > floor):
                accepted = True
                break
            s *= 0.5
        if not accepted:
            raise GeometryError(
                f"triangle inversion: line search failed at iteration {it} "
                f"(residual {res:.3e})"
            )
        V[:] = Vn
        tri_areas = ta
        area = new_area
        report.area_history.append(area)
        report.iterations = it + 1

    out.vertices = V
    return out, report


def graph_check(mesh: TriMesh, crossings: list[tuple[str, np.ndarray]],
                rho: float, x_threshold: float) -> dict:
    """Verify |<unit normal, e3>| >= x for every triangle whose centroid
    projects outside all rho-disks around the crossings."""
    normals = mesh.triangle_normals()
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    outside = np.ones(len(cent), dtype=bool)
    for _, pos in crossings:
        d = np.linalg.norm(cent[:, :2] - np.asarray(pos)[None, :], axis=1)
        outside &= d > rho
    nz = np.abs(normals[:, 2])
    checked = nz[outside]
    if len(checked) == 0:
        return {"pass": True, "n_checked": 0, "worst": None, "worst_at": None,
                "x_threshold": x_threshold}
    worst_idx = int(np.argmin(checked))
    sel = np.nonzero(outside)[0][worst_idx]
    return {
        "pass": bool(checked.min() >= x_threshold),
        "n_checked": int(len(checked)),
        "worst": float(checked.min()),
        "worst_at": [float(v) for v in cent[sel]],
        "x_threshold": x_threshold,
    }


def _helicoid_distances(k: float, c: float, rad, phi, z) -> np.ndarray:
    """Distance from points (polar rad/phi, height z) to the single-turn
    helicoid piece {(r cos th, r sin th, c + k th)} with the ruling angle
    th restricted to a half-turn of the point's own polar angle:
    f(th) = rad^2 sin^2(phi - th) + (z - c - k th)^2 minimized by
    safeguarded Newton, vectorized over points.  The window keeps a
    degenerate tightly-wound helicoid (k -> 0, th -> inf) from passing
    near every point."""
    best = np.full(len(rad), np.inf)
    for j in (-2.0, -1.0, 0.0, 1.0, 2.0):
        th0 = phi + j * np.pi
        th = th0.copy()
        for _ in range(12):
            dz = z - c - k * th
            fp = -(rad ** 2) * np.sin(2.0 * (phi - th)) - 2.0 * k * dz
            fpp = 2.0 * (rad ** 2) * np.cos(2.0 * (phi - th)) + 2.0 * k * k
            fpp = np.maximum(fpp, 1e-12 + 0.1 * (rad ** 2 + k * k))
            th = np.clip(th - fp / fpp, th0 - np.pi / 2, th0 + np.pi / 2)
        dz = z - c - k * th
        f = (rad * np.sin(phi - th)) ** 2 + dz ** 2
        best = np.minimum(best, f)
    return np.sqrt(best)


def helicoid_fit(mesh: TriMesh, crossing_pos: np.ndarray, rho: float,
                 t: float, pitch_hint: float | None = None) -> dict:
    """Least-squares fit of a helicoid with vertical axis through the
    crossing (pitch and vertical phase free) to the mesh vertices inside
    the rho-cylinder; returns the fit and the RMS distance normalized by
    t.  The model z = c + k theta carries two parameters; the phase is
    c-gauge, so (k, c) is identifiable."""
    center = np.asarray(crossing_pos, float)
    rel = mesh.vertices[:, :2] - center[None, :]
    dist2 = np.linalg.norm(rel, axis=1)
    mask = dist2 <= rho * (1.0 + 1e-9)
    if mask.sum() < 8:
        raise GeometryError(
            f"too few vertices ({int(mask.sum())}) in the rho-cylinder for a helicoid fit"
        )
    rad = dist2[mask]
    phi = np.arctan2(rel[mask, 1], rel[mask, 0])
    z = mesh.vertices[mask, 2]

    def rms(params):
        return float(np.sqrt(np.mean(
            _helicoid_distances(params[0], params[1], rad, phi, z) ** 2)))

    # seed by folding the polar angles modulo pi (rulings are full lines)
    # at a scanned fold origin and solving z ~ c + k*theta by least
    # squares, weighted by rad^2 (near-axis points carry no angle)
    cands = []
    wgt = rad
    for alpha in np.linspace(0.0, np.pi, 36, endpoint=False):
        theta = alpha + np.mod(phi - alpha, np.pi)
        Amat = np.column_stack([theta * wgt, wgt])
        try:
            (k0, c0), *_ = np.linalg.lstsq(Amat, z * wgt, rcond=None)
        except np.linalg.LinAlgError:
            continue
        cands.append((float(k0), float(c0)))
    if pitch_hint is not None:
        cands += [(abs(pitch_hint), t / 2), (-abs(pitch_hint), t / 2)]
    best = min(cands, key=lambda pc: rms(pc))

    from scipy.optimize import minimize

    sol = minimize(rms, x0=list(best), method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400})
    k, c = sol.x
    rms_d = float(sol.fun)
    return {
        "residual": rms_d / t,
        "rms_distance": rms_d,
        "pitch": float(k),
        "z_intercept": float(c),
        "n_vertices": int(mask.sum()),
    }


def embeddedness_spot_check(mesh: TriMesh, tol: float | None = None) -> dict:
    """Spot-check for self-intersection: bin triangle boxes on a coarse
    spatial hash and measure the distance between non-adjacent triangles
    sharing a cell.  Verification-mode only (quadratic-ish in dense
    spots); the asymptotic theory guarantees embeddedness for small t, so
    a hit signals a meshing or relaxation defect."""
    V = mesh.vertices
    T = mesh.triangles
    tv = V[T]
    lo = tv.min(axis=1)
    hi = tv.max(axis=1)
    if tol is None:
        e = V[T[:, 0]] - V[T[:, 1]]
        tol = 1e-6 * float(np.median(np.linalg.norm(e, axis=1)))
    cell = 2.0 * float(np.median(hi - lo))
    grid: dict[tuple, list[int]] = {}
    for i in range(len(T)):
        c0 = np.floor(lo[i] / cell).astype(int)
        c1 = np.floor(hi[i] / cell).astype(int)
        for cx in range(c0[0], c1[0] + 1):
            for cy in range(c0[1], c1[1] + 1):
                for cz in range(c0[2], c1[2] + 1):
                    grid.setdefault((cx, cy, cz), []).append(i)

    def tri_dist(i, j) -> float:
        best = np.inf
        for a, b in ((i, j), (j, i)):
            pa = tv[a]
            for k in range(3):
                best = min(best, _point_tri_distance(pa[k], tv[b]))
        for k in range(3):
            for l in range(3):
                best = min(best, _seg_seg_distance(
                    tv[i][k], tv[i][(k + 1) % 3], tv[j][l], tv[j][(l + 1) % 3]))
        return best

    checked = 0
    worst = np.inf
    offender = None
    seen = set()
    vsets = [set(map(int, tri)) for tri in T]
    for ids in grid.values():
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                i, j = ids[a], ids[b]
                if (i, j) in seen:
                    continue
                seen.add((i, j))
                if vsets[i] & vsets[j]:
                    continue
                if np.any(lo[i] > hi[j] + tol) or np.any(lo[j] > hi[i] + tol):
                    continue
                d = tri_dist(i, j)
                checked += 1
                if d < worst:
                    worst = d
                    offender = (i, j)
    ok = worst >= tol if checked else True
    return {"pass": bool(ok), "pairs_checked": checked,
            "min_distance": None if not checked else float(worst),
            "offender": offender if not ok else None}


def _point_tri_distance(p, tri) -> float:
    a, b, c = tri
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = ab @ ap
    d2 = ac @ ap
    if d1 <= 0 and d2 <= 0:
        return float(np.linalg.norm(ap))
    bp = p - b
    d3 = ab @ bp
    d4 = ac @ bp
    if d3 >= 0 and d4 <= d3:
        return float(np.linalg.norm(bp))
    vc = d1 * d4 - d3 * d2
    if vc <= 0 <= d1 and d3 <= 0:
        t = d1 / (d1 - d3)
        return float(np.linalg.norm(p - (a + t * ab)))
    cp = p - c
    d5 = ab @ cp
    d6 = ac @ cp
    if d6 >= 0 and d5 <= d6:
        return float(np.linalg.norm(cp))
    vb = d5 * d2 - d1 * d6
    if vb <= 0 <= d2 and d6 <= 0:
        t = d2 / (d2 - d6)
        return float(np.linalg.norm(p - (a + t * ac)))
    va = d3 * d6 - d5 * d4
    if va <= 0 and d4 - d3 >= 0 and d5 - d6 >= 0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return float(np.linalg.norm(p - (b + t * (c - b))))
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return float(np.linalg.norm(p - (a + ab * v + ac * w)))


def _seg_seg_distance(p1, q1, p2, q2) -> float:
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = d1 @ d1
    e = d2 @ d2
    f = d2 @ r
    if a <= 1e-300 and e <= 1e-300:
        return float(np.linalg.norm(r))
    if a <= 1e-300:
        s, t = 0.0, np.clip(f / e, 0.0, 1.0)
    else:
        c = d1 @ r
        if e <= 1e-300:
            t = 0.0
            s = np.clip(-c / a, 0.0, 1.0)
        else:
            b = d1 @ d2
            denom = a * e - b * b
            s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-300 else 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = np.clip(-c / a, 0.0, 1.0)
            elif t > 1.0:
                t = 1.0
                s = np.clip((b - c) / a, 0.0, 1.0)
    return float(np.linalg.norm((p1 + d1 * s) - (p2 + d2 * t)))


def double_graph_separation(top_xyz: np.ndarray, bottom_xyz: np.ndarray) -> float:
    """Minimum vertical gap between the TOP and BOTTOM graphs over a
    multiplicity-2 face: interpolate the bottom sheet at the top sheet's
    projected positions (and vice versa) and take the smallest gap."""
    gaps = []
    for upper, lower in ((top_xyz, bottom_xyz), (bottom_xyz, top_xyz)):
        interp = LinearNDInterpolator(lower[:, :2], lower[:, 2])
        zl = interp(upper[:, :2])
        ok = ~np.isnan(zl)
        if ok.any():
            diff = upper[ok, 2] - zl[ok]
            if upper is top_xyz:
                gaps.append(float(diff.min()))
            else:
                gaps.append(float((-diff).min()))
    if not gaps:
        raise GeometryError("sheets do not overlap in projection; cannot compare")
    return min(gaps)
