"""Orchestration shared by the CLI commands: config resolution, per-
varifold build/relax/stability processing, and the verification battery."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geom
from .arrangement import Arrangement, build as build_signed_arrangement
from .curves import CurveSet, Tolerances, load_curve_set
from .errors import InputError, VarifoldAtlasError
from .meshing import MeshParams, SurfaceBundle, assemble_mesh
from .relax import (
    double_graph_separation,
    embeddedness_spot_check,
    graph_check,
    helicoid_fit,
    relax,
)
from .sheets import SheetComplex, build_complex, cw_euler_characteristic, genus_and_boundaries
from .stability import STABLE, gauss_bonnet_defect, stability_verdict
from .trimesh import TriMesh
from .varifolds import (
    ORACLE_FACE_LIMIT,
    Varifold,
    brute_force_enumerate,
    classify_crossing,
    compute_stats,
    enumerate_varifolds,
    least_area_varifold,
    minus_face_counts,
    upper_bound,
)

DEFAULT_VERIFY = {
    "x_threshold": 0.9,
    "helicoid_residual_max": 0.1,
    "gauss_bonnet_max": 0.02,
    "require_stable": True,
}


@dataclass
class RunConfig:
    raw: dict
    curves: CurveSet
    t: float
    mesh: MeshParams
    verify: dict
    warnings: list[str]

    def echo(self) -> dict:
        cfg = dict(self.raw)
        cfg["t"] = self.t
        cfg["mesh"] = self.mesh.as_dict()
        cfg["tolerances"] = self.curves.tolerances.as_dict()
        cfg["verify"] = self.verify
        return cfg


def load_config(document) -> RunConfig:
    if isinstance(document, (str, Path)):
        p = Path(document)
        try:
            text = p.read_text()
        except OSError as exc:
            raise InputError(f"cannot read config {document}: {exc}") from exc
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"malformed config document: {exc}") from exc
    if not isinstance(document, dict):
        raise InputError("config document must be a JSON object")

    tol_doc = document.get("tolerances", {})
    if not isinstance(tol_doc, dict):
        raise InputError("'tolerances' must be an object")
    tolerances = Tolerances(
        theta_min=float(tol_doc.get("theta_min", Tolerances.theta_min)),
        eps_geo_factor=float(tol_doc.get("eps_geo_factor", Tolerances.eps_geo_factor)),
        max_crossings=int(tol_doc.get("max_crossings", Tolerances.max_crossings)),
    )
    curves = load_curve_set(document, tolerances)
    diameter = curves.diameter

    warnings = []
    t = float(document.get("t", 0.02 * diameter))
    if t <= 0:
        raise InputError("t must be positive")
    if t > 0.5 * diameter:
        warnings.append(
            f"t={t:.4g} exceeds 0.5*diameter={0.5 * diameter:.4g}: "
            "asymptotic regime not guaranteed"
        )

    mesh_doc = document.get("mesh", {})
    if not isinstance(mesh_doc, dict):
        raise InputError("'mesh' must be an object")
    mesh = MeshParams(
        t=t,
        h=float(mesh_doc.get("h", diameter / 45.0)),
        rho=(float(mesh_doc["rho"]) if "rho" in mesh_doc and mesh_doc["rho"] is not None else None),
        tol_H=(float(mesh_doc["tol_H"]) if "tol_H" in mesh_doc and mesh_doc["tol_H"] is not None else None),
        max_iters=int(mesh_doc.get("max_iters", 20000)),
        eig_tol=float(mesh_doc.get("eig_tol", 1e-8)),
    )
    verify = dict(DEFAULT_VERIFY)
    verify.update(document.get("verify", {}))
    return RunConfig(raw=document, curves=curves, t=t, mesh=mesh,
                     verify=verify, warnings=warnings)


def arrangement_summary(arr: Arrangement) -> dict:
    fi, fo = minus_face_counts(arr)
    return {
        "crossings": len(arr.crossings),
        "edges": len(arr.edges),
        "faces": len(arr.faces),
        "bounded_faces": len(arr.bounded_faces),
        "synthetic_vertices": sorted(arr.synthetic_vertices),
        "fi_minus": fi,
        "fo_minus": fo,
        "upper_bound": upper_bound(arr),
        "diameter": arr.curves.diameter,
    }


def varifold_entry(arr: Arrangement, v: Varifold, index: int,
                   least_area_index: int) -> tuple[dict, SheetComplex]:
    stats = compute_stats(v)
    complex_ = build_complex(arr, v)
    records = genus_and_boundaries(complex_)
    cw_chi = cw_euler_characteristic(complex_)
    entry = {
        "index": index,
        "multiplicities": {f.id: v.m(f.id) for f in arr.faces},
        "multiplicity_vector": list(v.vector()),
        "stats": stats.as_dict(),
        "cw_chi": cw_chi,
        "crossing_types": {c.id: classify_crossing(v, c) for c in arr.crossings},
        "least_area": index == least_area_index,
        "topology": {
            "component_count": complex_.n_components,
            "components": records,
            "boundary_loops_total": sum(r["boundary_loops"] for r in records),
        },
    }
    return entry, complex_


def enumerate_report_entries(arr: Arrangement):
    vs = enumerate_varifolds(arr)
    v0 = least_area_varifold(vs)
    least_idx = next(i for i, v in enumerate(vs) if v == v0)
    entries = []
    complexes = []
    for i, v in enumerate(vs):
        e, c = varifold_entry(arr, v, i, least_idx)
        entries.append(e)
        complexes.append(c)
    return vs, entries, complexes


def max_threads() -> int:
    try:
        return max(1, int(os.environ.get("VARIFOLD_ATLAS_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class BuiltSurface:
    bundle: SurfaceBundle
    relaxed: list[TriMesh]
    relax_reports: list
    stability: list
    verdict: str
    checks: dict


def build_and_verify_varifold(arr: Arrangement, v: Varifold, complex_: SheetComplex,
                              params: MeshParams, verify_cfg: dict,
                              run_checks: bool = True) -> BuiltSurface:
    """Assemble, relax and analyze one varifold's surface; runs the
    geometric description checks when run_checks is set."""
    bundle = assemble_mesh(complex_, params)
    p = bundle.params
    relaxed = []
    reports = []
    for mesh in bundle.components:
        before = mesh.vertices[mesh.boundary_vertex_mask()].copy()
        rm, rep = relax(mesh, tol_H=p.tol_H, max_iters=p.max_iters, step_h=p.h)
        after = rm.vertices[rm.boundary_vertex_mask()]
        if not np.array_equal(before, after):
            raise VarifoldAtlasError("boundary vertices moved during relaxation")
        relaxed.append(rm)
        reports.append(rep)

    stab = [stability_verdict(m, tol=p.eig_tol) for m in relaxed]
    verdict = STABLE if all(s.verdict == STABLE for s in stab) else \
        next(s.verdict for s in stab if s.verdict != STABLE)

    checks: dict = {}
    if run_checks:
        crossings = [(c.id, c.position) for c in arr.crossings]
        checks["graph"] = [
            graph_check(m, crossings, p.rho, verify_cfg["x_threshold"]) for m in relaxed
        ]
        fits = {}
        for cid in bundle.helicoidal:
            comp = complex_.component_of(("band", cid))
            fits[cid] = helicoid_fit(relaxed[comp], bundle.crossing_position(cid),
                                     p.rho, p.t)
        checks["helicoid"] = fits
        seps = {}
        for f in arr.faces:
            if v.m(f.id) == 2:
                seps[f.id] = _layer_separation(bundle, relaxed, f.id)
        checks["separation"] = seps
        checks["gauss_bonnet"] = [gauss_bonnet_defect(m) for m in relaxed]
        checks["embeddedness"] = [embeddedness_spot_check(m) for m in relaxed]
        checks["min_angle_deg"] = [m.min_angle_deg() for m in relaxed]
        for rep, gc in zip(reports, checks["graph"]):
            rep.graph_check = gc
        if reports:
            reports[0].helicoid_fits = fits or None
    return BuiltSurface(bundle=bundle, relaxed=relaxed, relax_reports=reports,
                        stability=stab, verdict=verdict, checks=checks)


def _layer_separation(bundle: SurfaceBundle, relaxed: list[TriMesh], face_id: str) -> float:
    from .sheets import BOTTOM, TOP

    def xyz(layer):
        gids = bundle.layer_ids[(face_id, layer)]
        comp_local = bundle.global_to_local[gids]
        return np.vstack([
            relaxed[ci].vertices[li] for ci, li in comp_local
        ])

    return double_graph_separation(xyz(TOP), xyz(BOTTOM))


def process_varifolds(arr, vs, entries, complexes, params, verify_cfg,
                      selected=None, run_checks=True):
    """Build surfaces for the selected varifold indices (None = all),
    in parallel when VARIFOLD_ATLAS_THREADS allows."""
    idxs = list(range(len(vs))) if selected is None else list(selected)

    def work(i):
        t0 = time.time()
        built = build_and_verify_varifold(arr, vs[i], complexes[i], params,
                                          verify_cfg, run_checks=run_checks)
        return i, built, time.time() - t0

    nthreads = max_threads()
    if nthreads > 1 and len(idxs) > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            results = list(ex.map(work, idxs))
    else:
        results = [work(i) for i in idxs]
    return {i: (built, dt) for i, built, dt in results}


def built_entry_fields(built: BuiltSurface) -> dict:
    out = {
        "relax": [r.as_dict() for r in built.relax_reports],
        "stability": [s.as_dict() for s in built.stability],
        "verdict": built.verdict,
        "components": [
            {"vertices": m.n_vertices, "triangles": m.n_triangles,
             "chi": m.euler_characteristic(),
             "boundary_loops": len(m.boundary_loops()),
             "area": m.area(), "min_angle_deg": m.min_angle_deg()}
            for m in built.relaxed
        ],
    }
    if built.checks:
        out["checks"] = {
            "graph": built.checks.get("graph"),
            "helicoid": built.checks.get("helicoid"),
            "separation": built.checks.get("separation"),
            "gauss_bonnet": built.checks.get("gauss_bonnet"),
            "embeddedness": built.checks.get("embeddedness"),
            "min_angle_deg": built.checks.get("min_angle_deg"),
        }
    return out


def all_curves_convex(curves: CurveSet, tol: float = 1e-9) -> bool:
    for c in curves.curves:
        p = c.points
        a = np.roll(p, -1, axis=0) - p
        b = np.roll(a, -1, axis=0)
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        scale = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
        if np.any(cross < -tol * np.maximum(scale, 1e-300)):
            return False
    return True


def verify_config(cfg: RunConfig, report: dict) -> tuple[bool, list[dict]]:
    """Run every cross-check; returns (all passed, check list).  Each
    check is {'name', 'passed', 'detail'}."""
    checks: list[dict] = []

    def add(name, passed, detail=""):
        checks.append({"name": name, "passed": bool(passed), "detail": str(detail)})

    arr = build_signed_arrangement(cfg.curves)
    report["arrangement"] = arrangement_summary(arr)
    vs, entries, complexes = enumerate_report_entries(arr)
    report["varifolds"] = entries

    if len(arr.bounded_faces) <= ORACLE_FACE_LIMIT:
        bf = brute_force_enumerate(arr)
        same = [v.vector() for v in vs] == [v.vector() for v in bf]
        add("enumeration-oracle-equality", same,
            f"{len(vs)} enumerated vs {len(bf)} brute-force")
    else:
        add("enumeration-oracle-equality", True,
            f"skipped: {len(arr.bounded_faces)} bounded faces exceed the "
            f"oracle limit {ORACLE_FACE_LIMIT}")

    try:
        for v in vs:
            for c in arr.crossings:
                classify_crossing(v, c)
        add("crossing-classification", True, "all patterns (0,1,0,1) or (0,1,2,1)")
    except VarifoldAtlasError as exc:
        add("crossing-classification", False, exc)

    chi_ok = all(e["stats"]["chi"] == e["cw_chi"] for e in entries)
    add("chi-formula-vs-cw", chi_ok,
        f"chis {[e['stats']['chi'] for e in entries]}")

    n_curves = len(cfg.curves.curves)
    loops_ok = all(e["topology"]["boundary_loops_total"] == n_curves for e in entries)
    add("boundary-loop-count", loops_ok, f"expected {n_curves} per varifold")

    from .arrangement import A_ONLY, B_ONLY, MINUS

    nested_minus = any(
        f.sign == MINUS and f.region_class in (A_ONLY, B_ONLY)
        for f in arr.bounded_faces
    )
    bound = upper_bound(arr)
    if nested_minus:
        add("counting-bound", True,
            "skipped: nested same-family faces fall outside the bound's hypotheses")
    else:
        add("counting-bound", len(vs) <= bound, f"count {len(vs)} <= bound {bound}")

    try:
        least_area_varifold(vs)
        add("least-area-uniqueness", True, "unique f2=0 varifold, strict area minimum")
    except VarifoldAtlasError as exc:
        add("least-area-uniqueness", False, exc)

    try:
        results = process_varifolds(arr, vs, entries, complexes, cfg.mesh,
                                    cfg.verify, run_checks=True)
    except VarifoldAtlasError as exc:
        add("surface-build", False, exc)
        return all(c["passed"] for c in checks), checks
    add("surface-build", True, f"{len(results)} varifolds built")

    for i, (built, dt) in sorted(results.items()):
        entries[i].update(built_entry_fields(built))
        entries[i]["build_seconds"] = round(dt, 3)
        tag = f"varifold {i}"
        add(f"relax-converged[{i}]",
            all(r.converged for r in built.relax_reports), tag)
        add(f"area-monotone[{i}]",
            all(all(r.area_history[j + 1] <= r.area_history[j]
                    for j in range(len(r.area_history) - 1))
                for r in built.relax_reports), tag)
        add(f"graph-check[{i}]",
            all(g["pass"] for g in built.checks["graph"]),
            f"worst {min((g['worst'] for g in built.checks['graph'] if g['worst'] is not None), default=None)}")
        fits = built.checks["helicoid"]
        add(f"helicoid-fit[{i}]",
            all(f["residual"] <= cfg.verify["helicoid_residual_max"] for f in fits.values()),
            {k: round(f["residual"], 4) for k, f in fits.items()})
        seps = built.checks["separation"]
        add(f"two-graph-separation[{i}]",
            all(s > 0 for s in seps.values()),
            {k: round(s, 6) for k, s in seps.items()})
        add(f"gauss-bonnet[{i}]",
            all(g <= cfg.verify["gauss_bonnet_max"] for g in built.checks["gauss_bonnet"]),
            [round(g, 5) for g in built.checks["gauss_bonnet"]])
        add(f"embedded[{i}]",
            all(e["pass"] for e in built.checks["embeddedness"]),
            f"{sum(e['pairs_checked'] for e in built.checks['embeddedness'])} pairs checked")
        add(f"triangle-quality[{i}]",
            all(a > 1.0 for a in built.checks["min_angle_deg"]),
            f"min angle {min(built.checks['min_angle_deg']):.2f} deg")
        if cfg.verify["require_stable"]:
            add(f"stable[{i}]", built.verdict == STABLE, built.verdict)
        mesh_chi = sum(m.euler_characteristic() for m in built.relaxed)
        add(f"mesh-chi[{i}]", mesh_chi == entries[i]["stats"]["chi"],
            f"mesh {mesh_chi} vs formula {entries[i]['stats']['chi']}")

    if all_curves_convex(cfg.curves):
        genus_ok = all(
            all(r["genus"] == 0 for r in e["topology"]["components"]) for e in entries
        )
        add("convex-genus-zero", genus_ok, "all curves convex")

    return all(c["passed"] for c in checks), checks


def replay_check(report_stored: dict, report_fresh: dict) -> tuple[bool, list[dict]]:
    """Compare a stored report's combinatorial fields to a recomputation."""
    checks = []
    old = report_stored.get("varifolds", [])
    new = report_fresh.get("varifolds", [])
    ok = len(old) == len(new)
    checks.append({"name": "replay-varifold-count", "passed": ok,
                   "detail": f"{len(old)} stored vs {len(new)} recomputed"})
    for i, (a, b) in enumerate(zip(old, new)):
        if a.get("multiplicity_vector") != b.get("multiplicity_vector"):
            checks.append({"name": f"replay-multiplicities[{i}]", "passed": False,
                           "detail": "multiplicity vector mismatch"})
        chi_a = a.get("stats", {}).get("chi")
        chi_b = b.get("stats", {}).get("chi")
        if chi_a != chi_b:
            checks.append({"name": f"replay-chi[{i}]", "passed": False,
                           "detail": f"chi mismatch: stored {chi_a}, recomputed {chi_b}"})
    passed = all(c["passed"] for c in checks)
    return passed, checks
