"""Rendering: SVG arrangement plots (faces filled by sign, crossings as
dots, optional multiplicity labels) and matplotlib figures for reports
(arrangement overview, relaxation history, 3D surface views)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import PatchCollection  # noqa: E402
from matplotlib.patches import PathPatch  # noqa: E402
from matplotlib.path import Path as MplPath  # noqa: E402

from .arrangement import MINUS, Arrangement  # noqa: E402

MINUS_FILL = "#d4d4d4"
PLUS_FILL = "#ffffff"


def _svg_path(loops: list[np.ndarray]) -> str:
    parts = []
    for lp in loops:
        coords = " L ".join(f"{x:.6g} {y:.6g}" for x, y in lp)
        parts.append(f"M {coords} Z")
    return " ".join(parts)


def write_arrangement_svg(arr: Arrangement, path, varifold=None,
                          labels: bool = False, size: int = 640) -> None:
    """Faces filled by sign (MINUS gray, PLUS white), curves stroked,
    crossings as dots; multiplicity labels when a varifold is given."""
    pts = np.vstack([c.points for c in arr.curves.curves])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = hi - lo
    pad = 0.06 * max(span)
    lo -= pad
    hi += pad
    span = hi - lo
    scale = size / max(span)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
        f'height="{size * span[1] / span[0]:.0f}" '
        f'viewBox="{lo[0]:.6g} {-hi[1]:.6g} {span[0]:.6g} {span[1]:.6g}">',
        f'<g transform="scale(1,-1)">',
        f'<rect x="{lo[0]:.6g}" y="{lo[1]:.6g}" width="{span[0]:.6g}" '
        f'height="{span[1]:.6g}" fill="{MINUS_FILL}"/>',
    ]
    faces = sorted(arr.bounded_faces, key=lambda f: -f.area)
    for f in faces:
        outer, holes = arr.face_polygon(f)
        fill = MINUS_FILL if f.sign == MINUS else PLUS_FILL
        d = _svg_path([outer] + holes)
        lines.append(f'<path d="{d}" fill="{fill}" fill-rule="evenodd" stroke="none"/>')
    sw = 0.5 / scale
    for c in arr.curves.curves:
        d = _svg_path([c.points])
        color = "#1a4d8f" if c.family == "A" else "#8f1a1a"
        lines.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="{2.2 * sw:.6g}"/>')
    r_dot = 3.2 * sw
    for cr in arr.crossings:
        x, y = cr.position
        lines.append(f'<circle cx="{x:.6g}" cy="{y:.6g}" r="{r_dot:.6g}" fill="#111111"/>')
    lines.append("</g>")
    if varifold is not None and labels:
        fs = 12 / scale
        for f in arr.bounded_faces:
            x, y = f.rep_point
            lines.append(
                f'<text x="{x:.6g}" y="{-y:.6g}" font-size="{fs:.6g}" '
                f'text-anchor="middle" fill="#333333">{varifold.m(f.id)}</text>'
            )
    lines.append("</svg>")
    Path(path).write_text("\n".join(lines))


def arrangement_figure(arr: Arrangement, path, varifold=None) -> None:
    fig, ax = plt.subplots(figsize=(6, 6))
    patches = []
    colors = []
    for f in sorted(arr.bounded_faces, key=lambda f: -f.area):
        outer, holes = arr.face_polygon(f)
        verts = list(outer) + [outer[0]]
        codes = [MplPath.MOVETO] + [MplPath.LINETO] * (len(outer) - 1) + [MplPath.CLOSEPOLY]
        for h in holes:
            verts += list(h) + [h[0]]
            codes += [MplPath.MOVETO] + [MplPath.LINETO] * (len(h) - 1) + [MplPath.CLOSEPOLY]
        patches.append(PathPatch(MplPath(verts, codes)))
        colors.append(MINUS_FILL if f.sign == MINUS else PLUS_FILL)
    col = PatchCollection(patches, facecolors=colors, edgecolors="none")
    ax.set_facecolor(MINUS_FILL)
    ax.add_collection(col)
    for c in arr.curves.curves:
        closed = np.vstack([c.points, c.points[:1]])
        ax.plot(closed[:, 0], closed[:, 1],
                color="#1a4d8f" if c.family == "A" else "#8f1a1a", lw=1.2)
    for cr in arr.crossings:
        ax.plot(*cr.position, "ko", ms=3)
    if varifold is not None:
        for f in arr.bounded_faces:
            ax.annotate(str(varifold.m(f.id)), f.rep_point, ha="center", va="center",
                        fontsize=9, color="#333333")
    ax.set_aspect("equal")
    ax.autoscale_view()
    ax.set_title("arrangement" + ("" if varifold is None else " with multiplicities"))
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def relax_history_figure(area_history, residual_history, path, title="") -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    ax1.plot(area_history, lw=1.0)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("total area")
    ax2.semilogy(residual_history, lw=1.0, color="#8f1a1a")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("max |H|")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def surface_figure(meshes, path, title="") -> None:
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    zmax = 0.0
    for mesh in meshes:
        v = mesh.vertices
        ax.plot_trisurf(v[:, 0], v[:, 1], v[:, 2], triangles=mesh.triangles,
                        cmap="viridis", linewidth=0.1, edgecolor="#44444422",
                        antialiased=True)
        zmax = max(zmax, float(v[:, 2].max()))
    span = max(float(np.ptp(np.vstack([m.vertices for m in meshes])[:, :2])), 1e-9)
    ax.set_zlim(-0.05 * span, max(3 * zmax, 0.2 * span))
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
