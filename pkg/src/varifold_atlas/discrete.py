"""Discrete differential geometry shared by relaxation and stability:
cotangent weights, mixed Voronoi areas, angle-defect curvature."""

from __future__ import annotations

import numpy as np
from scipy import sparse


def corner_cotangents(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """cot of the interior angle at each triangle corner, shape (m, 3)."""
    v = vertices
    t = triangles
    cots = np.empty((len(t), 3))
    for k in range(3):
        a = v[t[:, k]]
        b = v[t[:, (k + 1) % 3]]
        c = v[t[:, (k + 2) % 3]]
        u1 = b - a
        u2 = c - a
        dot = np.einsum("ij,ij->i", u1, u2)
        crs = np.linalg.norm(np.cross(u1, u2), axis=1)
        cots[:, k] = dot / np.maximum(crs, 1e-300)
    return cots


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    v = vertices
    t = triangles
    n = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    return 0.5 * np.linalg.norm(n, axis=1)


def laplace_coordinates(vertices: np.ndarray, triangles: np.ndarray):
    """(K, wsum): K_i = sum_j w_ij (x_i - x_j) with cotangent weights and
    wsum_i = sum_j w_ij.  K is the area gradient at each vertex, equal to
    2 A_i H_i n_i in the continuum limit."""
    n = len(vertices)
    cots = corner_cotangents(vertices, triangles)
    K = np.zeros((n, 3))
    wsum = np.zeros(n)
    for k in range(3):
        i = triangles[:, (k + 1) % 3]
        j = triangles[:, (k + 2) % 3]
        w = 0.5 * cots[:, k]
        diff = w[:, None] * (vertices[i] - vertices[j])
        for d in range(3):
            K[:, d] += np.bincount(i, weights=diff[:, d], minlength=n)
            K[:, d] -= np.bincount(j, weights=diff[:, d], minlength=n)
        wsum += np.bincount(i, weights=w, minlength=n)
        wsum += np.bincount(j, weights=w, minlength=n)
    return K, wsum


def cotangent_stiffness(vertices: np.ndarray, triangles: np.ndarray) -> sparse.csr_matrix:
    """Symmetric cotangent stiffness matrix S with S_ii = sum_j w_ij,
    S_ij = -w_ij; u^T S u approximates the Dirichlet energy integral."""
    n = len(vertices)
    cots = corner_cotangents(vertices, triangles)
    rows, cols, vals = [], [], []
    for k in range(3):
        i = triangles[:, (k + 1) % 3]
        j = triangles[:, (k + 2) % 3]
        w = 0.5 * cots[:, k]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def mixed_voronoi_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Per-vertex mixed Voronoi area with obtuse clamping: the obtuse
    corner takes half the triangle area and the other corners a quarter."""
    n = len(vertices)
    t = triangles
    cots = corner_cotangents(vertices, t)
    areas = triangle_areas(vertices, t)
    sq = np.empty((len(t), 3))
    for k in range(3):
        e = vertices[t[:, (k + 1) % 3]] - vertices[t[:, (k + 2) % 3]]
        sq[:, k] = np.einsum("ij,ij->i", e, e)  # squared edge opposite corner k

    out = np.zeros(n)
    obtuse_corner = cots < 0.0
    any_obtuse = obtuse_corner.any(axis=1)

    # non-obtuse: Voronoi area at corner k is (|e_j|^2 cot_j + |e_l|^2 cot_l)/8
    good = ~any_obtuse
    for k in range(3):
        j = (k + 1) % 3
        l = (k + 2) % 3
        av = (sq[:, j] * cots[:, j] + sq[:, l] * cots[:, l]) / 8.0
        np.add.at(out, t[good, k], av[good])
    for k in range(3):
        frac = np.where(obtuse_corner[:, k], 0.5, 0.25)
        np.add.at(out, t[any_obtuse, k], (frac * areas)[any_obtuse])
    return out


def vertex_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Area-weighted unit vertex normals."""
    n = len(vertices)
    t = triangles
    fn = np.cross(vertices[t[:, 1]] - vertices[t[:, 0]],
                  vertices[t[:, 2]] - vertices[t[:, 0]])
    out = np.zeros((n, 3))
    for k in range(3):
        for d in range(3):
            out[:, d] += np.bincount(t[:, k], weights=fn[:, d], minlength=n)
    ln = np.linalg.norm(out, axis=1, keepdims=True)
    return out / np.maximum(ln, 1e-300)


def corner_angles(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    v = vertices
    t = triangles
    ang = np.empty((len(t), 3))
    for k in range(3):
        a = v[t[:, k]]
        b = v[t[:, (k + 1) % 3]]
        c = v[t[:, (k + 2) % 3]]
        u1 = b - a
        u2 = c - a
        cosang = np.einsum("ij,ij->i", u1, u2) / np.maximum(
            np.linalg.norm(u1, axis=1) * np.linalg.norm(u2, axis=1), 1e-300)
        ang[:, k] = np.arccos(np.clip(cosang, -1.0, 1.0))
    return ang


def angle_defect_curvature(vertices: np.ndarray, triangles: np.ndarray,
                           boundary_mask: np.ndarray,
                           areas: np.ndarray | None = None) -> np.ndarray:
    """Gaussian curvature K = (2 pi - angle sum) / mixed area at interior
    vertices; boundary vertices are excluded (K = 0)."""
    n = len(vertices)
    ang = corner_angles(vertices, triangles)
    total = np.zeros(n)
    for k in range(3):
        np.add.at(total, triangles[:, k], ang[:, k])
    if areas is None:
        areas = mixed_voronoi_areas(vertices, triangles)
    K = np.zeros(n)
    interior = ~boundary_mask
    K[interior] = (2.0 * np.pi - total[interior]) / np.maximum(areas[interior], 1e-300)
    return K


def boundary_turning_total(vertices: np.ndarray, triangles: np.ndarray,
                           boundary_mask: np.ndarray) -> float:
    """Total geodesic curvature of the boundary: sum over boundary
    vertices of (pi - interior angle sum)."""
    ang = corner_angles(vertices, triangles)
    total = np.zeros(len(vertices))
    for k in range(3):
        np.add.at(total, triangles[:, k], ang[:, k])
    return float(np.sum(np.pi - total[boundary_mask]))
