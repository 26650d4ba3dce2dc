"""Embedded triangulated surface with fixed boundary.

Vertices carry tags: boundary vertices lie on curve A (z=0) or curve B
(z=t); SEAM marks welded interior vertices (smooth continuations and band
rims); HELICOID marks band-interior vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConsistencyError

INTERIOR = 0
ON_A = 1
ON_B = 2
SEAM = 3
HELICOID = 4

TAG_NAMES = {INTERIOR: "INTERIOR", ON_A: "ON_A", ON_B: "ON_B",
             SEAM: "SEAM", HELICOID: "HELICOID"}


@dataclass
class TriMesh:
    vertices: np.ndarray                 # (n, 3) float64
    triangles: np.ndarray                # (m, 3) int32, consistently oriented
    vertex_tags: np.ndarray = field(default=None)  # (n,) int8

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int32)
        if self.vertex_tags is None:
            self.vertex_tags = np.zeros(len(self.vertices), dtype=np.int8)
        else:
            self.vertex_tags = np.asarray(self.vertex_tags, dtype=np.int8)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def copy(self) -> "TriMesh":
        return TriMesh(self.vertices.copy(), self.triangles.copy(), self.vertex_tags.copy())

    # -- connectivity -------------------------------------------------------
    def edge_counts(self) -> tuple[np.ndarray, np.ndarray]:
        """(unique undirected edges (k,2), incidence counts (k,))."""
        t = self.triangles
        e = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e = np.sort(e, axis=1)
        uniq, counts = np.unique(e, axis=0, return_counts=True)
        return uniq, counts

    def boundary_edges(self) -> np.ndarray:
        """Directed boundary edges, oriented as traversed by their single
        triangle (so loops run consistently)."""
        t = self.triangles
        directed = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        und = np.sort(directed, axis=1)
        uniq, inv, counts = np.unique(und, axis=0, return_inverse=True, return_counts=True)
        return directed[counts[inv] == 1]

    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        be = self.boundary_edges()
        if len(be):
            mask[be.ravel()] = True
        return mask

    def boundary_loops(self) -> list[list[int]]:
        be = self.boundary_edges()
        nxt: dict[int, int] = {}
        for a, b in be:
            if int(a) in nxt:
                raise ConsistencyError("non-manifold boundary: vertex with two outgoing boundary edges")
            nxt[int(a)] = int(b)
        loops = []
        remaining = set(nxt)
        while remaining:
            start = min(remaining)
            loop = [start]
            remaining.discard(start)
            cur = nxt[start]
            while cur != start:
                loop.append(cur)
                remaining.discard(cur)
                cur = nxt[cur]
            loops.append(loop)
        return loops

    def euler_characteristic(self) -> int:
        uniq, _ = self.edge_counts()
        return self.n_vertices - len(uniq) + self.n_triangles

    # -- metrics ------------------------------------------------------------
    def triangle_normals(self, normalized: bool = True) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        n = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        if normalized:
            ln = np.linalg.norm(n, axis=1, keepdims=True)
            n = n / np.maximum(ln, 1e-300)
        return n

    def triangle_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.triangle_normals(normalized=False), axis=1)

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def min_angle_deg(self) -> float:
        v = self.vertices
        t = self.triangles
        angles = []
        for k in range(3):
            a = v[t[:, k]]
            b = v[t[:, (k + 1) % 3]]
            c = v[t[:, (k + 2) % 3]]
            u1 = b - a
            u2 = c - a
            cosang = np.einsum("ij,ij->i", u1, u2) / np.maximum(
                np.linalg.norm(u1, axis=1) * np.linalg.norm(u2, axis=1), 1e-300)
            angles.append(np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0))))
        return float(np.min(angles))

    # -- validity -----------------------------------------------------------
    def validate(self) -> None:
        """Manifold-with-boundary and orientation consistency checks."""
        if self.triangles.min(initial=0) < 0 or self.triangles.max(initial=-1) >= self.n_vertices:
            raise ConsistencyError("triangle index out of range")
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.triangles.ravel()] = True
        if not used.all():
            raise ConsistencyError("isolated vertices in mesh")
        uniq, counts = self.edge_counts()
        if counts.max(initial=0) > 2:
            raise ConsistencyError("non-manifold edge (more than two incident triangles)")
        t = self.triangles
        directed = np.vstack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        pairs, pair_counts = np.unique(directed, axis=0, return_counts=True)
        if pair_counts.max(initial=0) > 1:
            raise ConsistencyError("orientation conflict: repeated directed edge")
        self.boundary_loops()  # raises on non-manifold boundary

    def split_components(self) -> list["TriMesh"]:
        """Connected components as separate meshes (vertices compacted)."""
        parent = np.arange(self.n_vertices)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for tri in self.triangles:
            a = find(tri[0])
            for v in tri[1:]:
                b = find(v)
                if a != b:
                    parent[b] = a
        roots = {}
        comp_of_tri = np.array([roots.setdefault(find(t[0]), len(roots)) for t in self.triangles])
        out = []
        for ci in range(len(roots)):
            tris = self.triangles[comp_of_tri == ci]
            vids = np.unique(tris)
            remap = -np.ones(self.n_vertices, dtype=np.int64)
            remap[vids] = np.arange(len(vids))
            out.append(TriMesh(self.vertices[vids], remap[tris], self.vertex_tags[vids]))
        return out

    def orient_consistently(self) -> None:
        """Flip triangles so adjacent windings agree (BFS over adjacency);
        raises if the surface is non-orientable."""
        t = self.triangles
        m = len(t)
        edge_tris: dict[tuple[int, int], list[int]] = {}
        for i, tri in enumerate(t):
            for k in range(3):
                key = tuple(sorted((int(tri[k]), int(tri[(k + 1) % 3]))))
                edge_tris.setdefault(key, []).append(i)

        def directed_edges(tri):
            return [(int(tri[k]), int(tri[(k + 1) % 3])) for k in range(3)]

        state = np.zeros(m, dtype=np.int8)  # 0 unvisited, 1 keep, -1 flip
        for seed in range(m):
            if state[seed]:
                continue
            state[seed] = 1
            stack = [seed]
            while stack:
                i = stack.pop()
                tri_i = t[i] if state[i] == 1 else t[i][::-1]
                des_i = directed_edges(tri_i)
                for k in range(3):
                    key = tuple(sorted(des_i[k]))
                    for j in edge_tris[key]:
                        if j == i:
                            continue
                        shares = des_i[k] in directed_edges(t[j])
                        want = -1 if shares else 1
                        if state[j] == 0:
                            state[j] = want
                            stack.append(j)
                        elif state[j] != want:
                            raise ConsistencyError("non-orientable weld")
        flip = state == -1
        t[flip] = t[flip][:, ::-1]

    # -- io -------------------------------------------------------------
    def write_obj(self, path) -> None:
        path = Path(path)
        with path.open("w") as fh:
            for x, y, z in self.vertices:
                fh.write(f"v {x:.12g} {y:.12g} {z:.12g}\n")
            for a, b, c in self.triangles + 1:
                fh.write(f"f {a} {b} {c}\n")
